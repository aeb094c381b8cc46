"""Far-field (Fraunhofer) intensities and their extrema.

This is the wave-optics side of the cross-check: it knows nothing about
quantization and is only ever compared against
:func:`qscatter.kinematics.quantized_angles` from the outside.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .kinematics import (
    Aperture,
    Beam,
    Branch,
    DoubleSlit,
    Laue,
    Scenario,
    ScatteringBranch,
    quantized_angles,
)

DEFAULT_GRID = 20001
DEFAULT_REFINE_TOL = 1e-10
DEFAULT_PLANES = 50

EXACT_THRESHOLD = 1e-9
ENVELOPE_FACTOR = 0.08  # times lam / a
SUPPRESSED_BELOW = 1e-6
PRINCIPAL_MIN_VALUE = 0.5

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


class ProfileKind(enum.Enum):
    SINGLE_SLIT = "SingleSlit"
    DOUBLE_SLIT = "DoubleSlit"
    LATTICE = "Lattice"


class ExtremumKind(enum.Enum):
    MAXIMUM = "Maximum"
    MINIMUM = "Minimum"


@dataclass(frozen=True)
class IntensityProfile:
    kind: ProfileKind
    lam: float
    a: float | None = None
    c: float | None = None
    d: float | None = None
    n_planes: int = DEFAULT_PLANES

    def __post_init__(self):
        needed = {
            ProfileKind.SINGLE_SLIT: ("a",),
            ProfileKind.DOUBLE_SLIT: ("a", "c"),
            ProfileKind.LATTICE: ("d",),
        }[self.kind]
        for name in ("lam",) + needed:
            value = getattr(self, name)
            if value is None or not value > 0:
                raise ValueError(f"{self.kind.value} profile needs {name} > 0, got {value!r}")
        if self.kind is ProfileKind.LATTICE and int(self.n_planes) < 2:
            raise ValueError(f"lattice needs at least 2 planes, got {self.n_planes!r}")


def single_slit(a: float, lam: float) -> IntensityProfile:
    return IntensityProfile(ProfileKind.SINGLE_SLIT, lam, a=a)


def double_slit(a: float, c: float, lam: float) -> IntensityProfile:
    return IntensityProfile(ProfileKind.DOUBLE_SLIT, lam, a=a, c=c)


def lattice(d: float, lam: float, n_planes: int = DEFAULT_PLANES) -> IntensityProfile:
    return IntensityProfile(ProfileKind.LATTICE, lam, d=d, n_planes=int(n_planes))


def two_slit_factor(c: float, lam: float) -> IntensityProfile:
    """The ``cos^2`` fringe factor alone: a two-plane lattice of spacing ``c/2``."""
    return lattice(c / 2.0, lam, 2)


def profile_for(s: Scenario, beam: Beam, n_planes: int = DEFAULT_PLANES) -> IntensityProfile:
    if isinstance(s, Laue):
        return lattice(s.d, beam.lam, n_planes)
    if isinstance(s, Aperture):
        return single_slit(s.a, beam.lam)
    return double_slit(s.a, s.c, beam.lam)


# ------------------------------------------------------------ closed forms


def _sinc2(t):
    # np.sinc(t) = sin(pi t) / (pi t)
    return np.sinc(t) ** 2


def _sinc2_slope(t):
    """d/dt of sinc(t)^2 with sinc(t) = sin(pi t)/(pi t)."""
    u = np.pi * t
    small = np.abs(u) < 1e-4
    safe = np.where(small, 1.0, u)
    ds = np.where(small, -u / 3.0, (safe * np.cos(safe) - np.sin(safe)) / safe**2)
    return 2.0 * np.sinc(t) * ds * np.pi


def _cos2(t):
    return np.cos(np.pi * t) ** 2


def _cos2_slope(t):
    return -np.pi * np.sin(2.0 * np.pi * t)


def _lattice_ratio(t, n):
    """sin(n x) / (n sin x) at x = pi t, after shifting t by whole periods."""
    x = np.pi * (t - np.round(t))
    at_peak = x == 0.0
    safe = np.where(at_peak, 1.0, x)
    return np.where(at_peak, 1.0, np.sin(n * safe) / (n * np.sin(safe)))


def _lattice_slope(t, n):
    x = np.pi * (t - np.round(t))
    r = _lattice_ratio(t, n)
    near = np.abs(x) < 1e-3 / n
    safe = np.where(near, 1.0, x)
    dr = np.where(
        near,
        -(n * n - 1.0) * x / 3.0,
        (n * np.cos(n * safe) * np.sin(safe) - np.sin(n * safe) * np.cos(safe)) / (n * np.sin(safe) ** 2),
    )
    return 2.0 * r * dr * np.pi


def _check_domain(s):
    s = np.asarray(s, dtype=np.float64)
    if np.any(np.abs(s) > 1.0) or np.any(np.isnan(s)):
        raise ValueError("sin_theta must lie in [-1, 1]")
    return s


def intensity(profile: IntensityProfile, sin_theta):
    """Relative intensity (peak value 1) at ``sin_theta``; scalar or array."""
    s = _check_domain(sin_theta)
    p = profile
    if p.kind is ProfileKind.SINGLE_SLIT:
        out = _sinc2(p.a * s / p.lam)
    elif p.kind is ProfileKind.DOUBLE_SLIT:
        out = _cos2(p.c * s / p.lam) * _sinc2(p.a * s / p.lam)
    else:
        out = _lattice_ratio(2.0 * p.d * s / p.lam, p.n_planes) ** 2
    return out if out.ndim else float(out)


def intensity_slope(profile: IntensityProfile, sin_theta):
    """Analytic derivative of :func:`intensity` with respect to ``sin_theta``."""
    s = np.asarray(sin_theta, dtype=np.float64)
    p = profile
    if p.kind is ProfileKind.SINGLE_SLIT:
        out = _sinc2_slope(p.a * s / p.lam) * p.a / p.lam
    elif p.kind is ProfileKind.DOUBLE_SLIT:
        tc, ta = p.c * s / p.lam, p.a * s / p.lam
        out = _cos2_slope(tc) * p.c / p.lam * _sinc2(ta) + _cos2(tc) * _sinc2_slope(ta) * p.a / p.lam
    else:
        out = _lattice_slope(2.0 * p.d * s / p.lam, p.n_planes) * 2.0 * p.d / p.lam
    return out if out.ndim else float(out)


# ------------------------------------------------------------ extrema


@dataclass(frozen=True)
class Extremum:
    location: float
    kind: ExtremumKind
    value: float


def _golden_max(f, a, b, tol):
    a, b = a.copy(), b.copy()
    width = float(np.max(b - a)) if a.size else 0.0
    if width <= tol:
        return 0.5 * (a + b)
    steps = int(math.ceil(math.log(tol / width) / math.log(_INV_PHI)))
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(steps):
        left = fc > fd
        # keep [a, d] where the left probe wins, else [c, b]
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        new_c = np.where(left, b - _INV_PHI * (b - a), d)
        new_d = np.where(left, c, a + _INV_PHI * (b - a))
        fc_new = np.where(left, f(new_c), fd)
        fd_new = np.where(left, fc, f(new_d))
        c, d, fc, fd = new_c, new_d, fc_new, fd_new
    return 0.5 * (a + b)


def _bisect_slope(g, a, b, tol):
    """Bisect on the sign of ``g`` where ``g(a) < 0 < g(b)``; other lanes return NaN."""
    a, b = a.copy(), b.copy()
    ok = (g(a) < 0) & (g(b) > 0)
    width = float(np.max(b - a)) if a.size else 0.0
    steps = int(math.ceil(math.log2(width / tol))) + 1 if width > tol else 0
    for _ in range(steps):
        m = 0.5 * (a + b)
        gm = g(m)
        a = np.where(gm < 0, m, a)
        b = np.where(gm > 0, m, b)
        hit = gm == 0
        a = np.where(hit, m, a)
        b = np.where(hit, m, b)
    return np.where(ok, 0.5 * (a + b), np.nan)


def find_extrema(
    profile: IntensityProfile,
    kind: ExtremumKind | None = None,
    grid_points: int = DEFAULT_GRID,
    refine_tol: float = DEFAULT_REFINE_TOL,
) -> list[Extremum]:
    """Interior extrema of ``profile`` on ``sin_theta`` in (-1, 1), sorted.

    The grid brackets every sign change of the first difference.  Maxima
    are refined by golden-section search, minima by bisection on the sign of
    the analytic slope; maxima are then polished the same way, since on a
    flat top the golden search stalls near sqrt(machine eps).
    """
    if grid_points < 1001:
        raise ValueError(f"grid_points must be >= 1001, got {grid_points}")
    if not 0 < refine_tol <= 1e-8:
        raise ValueError(f"refine_tol must be in (0, 1e-8], got {refine_tol}")

    grid = np.linspace(-1.0, 1.0, int(grid_points))
    values = np.asarray(intensity(profile, grid))
    lo, hi, is_max = _kernels.bracket_sign_changes(values)
    a, b = grid[lo], grid[hi]

    f = lambda x: np.asarray(intensity(profile, np.clip(x, -1.0, 1.0)))  # noqa: E731
    slope = lambda x: np.asarray(intensity_slope(profile, np.clip(x, -1.0, 1.0)))  # noqa: E731

    loc = np.empty_like(a)
    if np.any(is_max):
        am, bm = a[is_max], b[is_max]
        rough = _golden_max(f, am, bm, refine_tol)
        w = 1e-6
        pa, pb = np.maximum(am, rough - w), np.minimum(bm, rough + w)
        fine = _bisect_slope(lambda x: -slope(x), pa, pb, refine_tol)
        fine = np.where(np.isnan(fine), _bisect_slope(lambda x: -slope(x), am, bm, refine_tol), fine)
        loc[is_max] = np.where(np.isnan(fine), rough, fine)
    if np.any(~is_max):
        an, bn = a[~is_max], b[~is_max]
        fine = _bisect_slope(slope, an, bn, refine_tol)
        fallback = _golden_max(lambda x: -f(x), an, bn, refine_tol)
        loc[~is_max] = np.where(np.isnan(fine), fallback, fine)

    # second difference at grid scale decides the label
    h = 2.0 / (grid_points - 1)
    mid = f(loc)
    curv = f(loc - h) - 2.0 * mid + f(loc + h)
    label_max = np.where(curv != 0, curv < 0, is_max)

    found = []
    last = None
    for x, v, m in sorted(zip(loc.tolist(), mid.tolist(), label_max.tolist())):
        if not -1.0 < x < 1.0:
            continue
        if last is not None and x - last <= 10 * refine_tol:
            continue
        last = x
        ek = ExtremumKind.MAXIMUM if m else ExtremumKind.MINIMUM
        if kind is None or kind is ek:
            found.append(Extremum(x, ek, v))
    return found


# ------------------------------------------------------------ comparison


@dataclass(frozen=True)
class ComparisonRow:
    branch: ScatteringBranch
    extremum: Extremum | None
    residual: float | None
    threshold: float = math.inf
    suppressed: bool = False

    @property
    def passed(self) -> bool:
        if self.suppressed:
            return True
        return self.residual is not None and self.residual <= self.threshold


@dataclass
class ComparisonReport:
    rows: list[ComparisonRow]
    unmatched_extrema: list[Extremum] = field(default_factory=list)

    @property
    def matched(self) -> int:
        return sum(r.extremum is not None for r in self.rows)

    @property
    def unmatched_branches(self) -> list[ScatteringBranch]:
        return [r.branch for r in self.rows if r.extremum is None]

    @property
    def ok(self) -> bool:
        return all(r.passed for r in self.rows)

    def max_residual(self, family: Branch) -> float | None:
        """Largest residual in ``family``; ``inf`` if one of its branches went unmatched."""
        rows = [r for r in self.rows if r.branch.branch is family]
        if not rows:
            return None
        return max(math.inf if r.residual is None else r.residual for r in rows)

    def summary(self) -> str:
        lines = []
        for fam in Branch:
            rows = [r for r in self.rows if r.branch.branch is fam]
            if not rows:
                continue
            worst = self.max_residual(fam)
            n_fail = sum(not r.passed for r in rows)
            n_supp = sum(r.suppressed for r in rows)
            lines.append(
                f"{fam.value}: {len(rows)} branches, max residual {worst:.3e} "
                f"(threshold {rows[0].threshold:.3e}), {n_supp} suppressed, {n_fail} failed"
            )
        lines.append("PASS" if self.ok else "FAIL")
        return "\n".join(lines)


def compare_extrema(
    branches: list[ScatteringBranch], extrema: list[Extremum], matching_tol: float
) -> ComparisonReport:
    """Greedy nearest-neighbour pairing on ``sin_theta``.

    Closest pairs are taken first; pairs further apart than ``matching_tol``
    are never formed.
    """
    if not branches or not extrema:
        return ComparisonReport([ComparisonRow(b, None, None) for b in branches], list(extrema))
    bs = np.array([b.sin_theta for b in branches])
    es = np.array([e.location for e in extrema])
    dist = np.abs(bs[:, None] - es[None, :])
    ii, jj = np.nonzero(dist <= matching_tol)
    order = np.lexsort((jj, ii, dist[ii, jj]))
    pair_of = {}
    used = set()
    for i, j in zip(ii[order].tolist(), jj[order].tolist()):
        if i in pair_of or j in used:
            continue
        pair_of[i] = j
        used.add(j)
    rows = []
    for i, b in enumerate(branches):
        j = pair_of.get(i)
        if j is None:
            rows.append(ComparisonRow(b, None, None))
        else:
            rows.append(ComparisonRow(b, extrema[j], float(dist[i, j])))
    leftover = [e for j, e in enumerate(extrema) if j not in used]
    return ComparisonReport(rows, leftover)


def compare_scenario(
    s: Scenario,
    beam: Beam,
    boundary_inclusive: bool = False,
    grid_points: int = DEFAULT_GRID,
    refine_tol: float = DEFAULT_REFINE_TOL,
    n_planes: int = DEFAULT_PLANES,
) -> ComparisonReport:
    """Match every quantized branch of ``s`` against its wave-optics counterpart.

    LaueOrder     vs principal maxima of the N-plane lattice
    ApertureOrder vs all single-slit extrema
    Interference  vs maxima of the cos^2 fringe factor
    Envelope      vs secondary single-slit maxima (central lobe excluded)
    """
    lam = beam.lam
    branches = quantized_angles(s, beam, boundary_inclusive)
    scan = dict(grid_points=grid_points, refine_tol=refine_tol)

    plan = []
    if isinstance(s, Laue):
        peaks = [
            e
            for e in find_extrema(lattice(s.d, lam, n_planes), ExtremumKind.MAXIMUM, **scan)
            if e.value >= PRINCIPAL_MIN_VALUE
        ]
        plan.append((Branch.LAUE_ORDER, peaks, lam / (4.0 * s.d), EXACT_THRESHOLD))
    elif isinstance(s, Aperture):
        plan.append((Branch.APERTURE_ORDER, find_extrema(single_slit(s.a, lam), **scan), lam / (2.0 * s.a), EXACT_THRESHOLD))
    else:
        fringes = find_extrema(two_slit_factor(s.c, lam), ExtremumKind.MAXIMUM, **scan)
        plan.append((Branch.INTERFERENCE, fringes, lam / (2.0 * s.c), EXACT_THRESHOLD))
        secondary = [
            e
            for e in find_extrema(single_slit(s.a, lam), ExtremumKind.MAXIMUM, **scan)
            if abs(e.location) > lam / s.a
        ]
        plan.append((Branch.ENVELOPE, secondary, lam / (2.0 * s.a), ENVELOPE_FACTOR * lam / s.a))

    full = profile_for(s, beam, n_planes)
    rows, leftover = [], []
    for family, extrema, match_tol, threshold in plan:
        fam_branches = [b for b in branches if b.branch is family]
        rep = compare_extrema(fam_branches, extrema, match_tol)
        leftover.extend(rep.unmatched_extrema)
        for r in rep.rows:
            suppressed = family is Branch.INTERFERENCE and intensity(full, r.branch.sin_theta) < SUPPRESSED_BELOW
            rows.append(ComparisonRow(r.branch, r.extremum, r.residual, threshold, suppressed))
    rows.sort(key=lambda r: r.branch.sin_theta)
    return ComparisonReport(rows, leftover)
