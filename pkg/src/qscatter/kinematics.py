"""Scenarios, beams and the discrete scattering angles allowed by
momentum-transfer quantization.

A scatterer whose amplitude repeats (up to sign) over an interval ``Q`` only
exchanges transverse momentum in quanta: ``dp * Q = n h`` for a ``+`` symmetry
and ``dp * Q = (n + 1/2) h`` for a ``-`` symmetry.  With ``p = h / lam`` every
allowed direction is then a ratio of lengths, so ``h`` only scales the
reported momenta.

All lengths share one arbitrary unit.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Union

H_NATURAL = 1.0
H_SI = 6.62607015e-34  # J s, exact by definition of the SI

DEFAULT_TOL = 1e-12


class Rule(enum.Enum):
    """Sign of the amplitude symmetry; selects integer or half-integer quanta."""

    PLUS = "Plus"
    MINUS = "Minus"

    @property
    def offset(self) -> float:
        return 0.0 if self is Rule.PLUS else 0.5


class Branch(enum.Enum):
    LAUE_ORDER = "LaueOrder"
    APERTURE_ORDER = "ApertureOrder"
    INTERFERENCE = "Interference"
    ENVELOPE = "Envelope"


class Interaction(enum.Enum):
    REFLECTION = "Reflection"
    TRANSMISSION = "Transmission"


def _require_positive(name: str, value: float) -> float:
    value = float(value)
    if not (value > 0.0 and math.isfinite(value)):
        raise ValueError(f"{name} must be a positive finite number, got {value!r}")
    return value


def characteristic_length(p: float, h: float = H_NATURAL) -> float:
    """Return ``h / p``, the length that plays the role of a wavelength."""
    p = _require_positive("p", p)
    h = _require_positive("h", h)
    return h / p


@dataclass(frozen=True)
class Beam:
    """Incident particles of characteristic length ``lam``; ``p`` is derived."""

    lam: float
    h: float = H_NATURAL

    def __post_init__(self):
        object.__setattr__(self, "lam", _require_positive("lambda", self.lam))
        object.__setattr__(self, "h", _require_positive("h", self.h))

    @classmethod
    def from_momentum(cls, p: float, h: float = H_NATURAL) -> "Beam":
        return cls(characteristic_length(p, h), h)

    @property
    def p(self) -> float:
        return self.h / self.lam


@dataclass(frozen=True)
class Laue:
    """Crystal with reflecting planes spaced ``d`` apart."""

    d: float

    def __post_init__(self):
        object.__setattr__(self, "d", _require_positive("d", self.d))


@dataclass(frozen=True)
class Aperture:
    """Single slit of width ``a``."""

    a: float

    def __post_init__(self):
        object.__setattr__(self, "a", _require_positive("a", self.a))


@dataclass(frozen=True)
class DoubleSlit:
    """Two slits of width ``a`` whose centres are ``c`` apart."""

    a: float
    c: float

    def __post_init__(self):
        object.__setattr__(self, "a", _require_positive("a", self.a))
        object.__setattr__(self, "c", _require_positive("c", self.c))
        if not self.c > self.a:
            raise ValueError(f"slits overlap: need c > a, got a={self.a!r}, c={self.c!r}")


Scenario = Union[Laue, Aperture, DoubleSlit]


def scale_scenario(s: Scenario, factor: float) -> Scenario:
    """Multiply every length of ``s`` by ``factor``."""
    if isinstance(s, Laue):
        return Laue(s.d * factor)
    if isinstance(s, Aperture):
        return Aperture(s.a * factor)
    return DoubleSlit(s.a * factor, s.c * factor)


@dataclass(frozen=True)
class SymmetryInterval:
    length: float
    rule: Rule
    label: str

    def __post_init__(self):
        object.__setattr__(self, "length", _require_positive("length", self.length))


@dataclass(frozen=True)
class ScatteringBranch:
    branch: Branch
    order: int
    sin_theta: float
    theta: float
    delta_pz: float


def symmetry_intervals(s: Scenario) -> list[SymmetryInterval]:
    """Intervals over which the amplitude of ``s`` repeats, with their sign."""
    if isinstance(s, Laue):
        return [SymmetryInterval(s.d, Rule.PLUS, "plane spacing")]
    if isinstance(s, Aperture):
        return [SymmetryInterval(s.a, Rule.PLUS, "aperture edges")]
    if isinstance(s, DoubleSlit):
        return [
            SymmetryInterval(s.c, Rule.PLUS, "slit centres"),
            SymmetryInterval(s.c + s.a, Rule.MINUS, "outer slit edges"),
        ]
    raise TypeError(f"not a scenario: {s!r}")


def interaction_kind(s: Scenario) -> Interaction:
    return Interaction.REFLECTION if isinstance(s, Laue) else Interaction.TRANSMISSION


def _transfer_from_sin(sin_theta: float, beam: Beam, kind: Interaction) -> float:
    factor = 2.0 if kind is Interaction.REFLECTION else 1.0
    return factor * beam.h / beam.lam * sin_theta


def momentum_transfer(theta: float, beam: Beam, kind: Interaction) -> float:
    """Transverse momentum exchanged when deflected by ``theta``.

    Reflection reverses the normal component, so it transfers twice the
    transmission value.
    """
    if abs(theta) > math.pi / 2:
        raise ValueError(f"|theta| must not exceed pi/2, got {theta!r}")
    return _transfer_from_sin(math.sin(theta), beam, kind)


@dataclass(frozen=True)
class _Family:
    branch: Branch
    length: float  # effective length: sin_theta = (k + offset) * lam / length
    offset: float
    min_order: int | None  # None means unbounded below (mirror of max)


def _families(s: Scenario) -> list[_Family]:
    if isinstance(s, Laue):
        return [_Family(Branch.LAUE_ORDER, 2.0 * s.d, 0.0, 1)]
    if isinstance(s, Aperture):
        return [_Family(Branch.APERTURE_ORDER, s.a, 0.0, None)]
    if isinstance(s, DoubleSlit):
        return [
            _Family(Branch.INTERFERENCE, s.c, 0.0, None),
            _Family(Branch.ENVELOPE, s.a, 0.5, None),
        ]
    raise TypeError(f"not a scenario: {s!r}")


def _sin_for(fam: _Family, k: int, lam: float) -> float:
    return (k + fam.offset) * lam / fam.length


def _admissible(sin_theta: float, inclusive: bool, tol: float) -> bool:
    on_boundary = abs(abs(sin_theta) - 1.0) <= tol
    if inclusive:
        return abs(sin_theta) <= 1.0 or on_boundary
    return abs(sin_theta) < 1.0 and not on_boundary


def order_range(
    s: Scenario, beam: Beam, boundary_inclusive: bool = False, tol: float = DEFAULT_TOL
) -> dict[Branch, tuple[int, int]]:
    """Integer bounds ``(min_order, max_order)`` per branch family.

    A family with no admissible order gets ``min_order > max_order``.
    """
    bounds = {}
    for fam in _families(s):
        kmax = math.floor(fam.length / beam.lam - fam.offset) + 1
        while kmax >= -1 and not _admissible(_sin_for(fam, kmax, beam.lam), boundary_inclusive, tol):
            kmax -= 1
        if fam.min_order is not None:
            kmin = fam.min_order
        else:
            # (k + offset) is symmetric about -offset
            kmin = -kmax - int(2 * fam.offset)
        bounds[fam.branch] = (kmin, kmax)
    return bounds


def quantized_angles(
    s: Scenario, beam: Beam, boundary_inclusive: bool = False, tol: float = DEFAULT_TOL
) -> list[ScatteringBranch]:
    """Every discrete direction the scenario allows, sorted by ``sin_theta``.

    An empty list is a valid answer (beam too coarse for the scatterer).
    """
    kind = interaction_kind(s)
    bounds = order_range(s, beam, boundary_inclusive, tol)
    out = []
    for fam in _families(s):
        kmin, kmax = bounds[fam.branch]
        for k in range(kmin, kmax + 1):
            st = _sin_for(fam, k, beam.lam)
            st = max(-1.0, min(1.0, st))
            out.append(
                ScatteringBranch(
                    branch=fam.branch,
                    order=k,
                    sin_theta=st,
                    theta=math.asin(st),
                    delta_pz=_transfer_from_sin(st, beam, kind),
                )
            )
    # stable sort keeps Interference ahead of Envelope on exact ties
    out.sort(key=lambda b: b.sin_theta)
    return out


def verify_quantum(
    branch: ScatteringBranch, interval: SymmetryInterval, h: float = H_NATURAL, tol: float = DEFAULT_TOL
) -> bool:
    """True if ``delta_pz * Q`` is an integer (Plus) or half-integer (Minus) multiple of ``h``."""
    action = branch.delta_pz * interval.length / h
    off = interval.rule.offset
    target = round(action - off) + off
    return math.isclose(action, target, rel_tol=tol, abs_tol=tol)


def verification_interval(branch: ScatteringBranch, s: Scenario) -> SymmetryInterval:
    """The interval a branch's quantum is checked against.

    Envelope directions come from solving the two double-slit conditions
    jointly: subtracting the inner (``c``, integer) condition from the outer
    (``c + a``, half-integer) one leaves a half-integer condition over the
    difference of the two intervals.
    """
    intervals = symmetry_intervals(s)
    if branch.branch is Branch.ENVELOPE:
        inner, outer = intervals
        return SymmetryInterval(outer.length - inner.length, Rule.MINUS, "outer minus inner")
    return intervals[0]


def verify_branch(branch: ScatteringBranch, s: Scenario, h: float = H_NATURAL, tol: float = DEFAULT_TOL) -> bool:
    return verify_quantum(branch, verification_interval(branch, s), h, tol)
