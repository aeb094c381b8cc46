"""JSON run configuration.

A config is one JSON object with the keys ``scenario``, ``beam``, ``oracle``,
``simulation`` and ``output``.  Unknown keys anywhere are rejected so typos
fail loudly instead of silently falling back to defaults.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema

from .ensemble import UINT64_MAX, ConfigError, SimConfig, WeightMode
from .kinematics import H_NATURAL, Aperture, Beam, DoubleSlit, Laue, Scenario
from .oracle import DEFAULT_GRID, DEFAULT_PLANES, DEFAULT_REFINE_TOL

_POS = {"type": "number", "exclusiveMinimum": 0}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["scenario", "beam"],
    "properties": {
        "scenario": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["laue", "aperture", "double_slit"]},
                "d": _POS,
                "a": _POS,
                "c": _POS,
            },
        },
        "beam": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"lambda": _POS, "p": _POS},
        },
        "oracle": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "grid": {"type": "integer", "minimum": 1001},
                "tol": {"type": "number", "exclusiveMinimum": 0, "maximum": 1e-8},
                "n_planes": {"type": "integer", "minimum": 2},
            },
        },
        "simulation": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n_particles": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer", "minimum": 0, "maximum": UINT64_MAX},
                "weight_mode": {"enum": [m.value for m in WeightMode]},
                "weights": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1},
                "screen_distance": _POS,
                "bins": {"type": "integer", "minimum": 2},
                "bin_range": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
                "shards": {"type": "integer", "minimum": 1},
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"dir": {"type": "string", "minLength": 1}},
        },
    },
}

_FIELDS = {"laue": ("d",), "aperture": ("a",), "double_slit": ("a", "c")}


@dataclass
class RunConfig:
    """Validated config with command-line overrides applied."""

    scenario: Scenario
    beam: Beam
    raw: dict
    boundary_inclusive: bool = False
    grid: int = DEFAULT_GRID
    tol: float = DEFAULT_REFINE_TOL
    n_planes: int = DEFAULT_PLANES
    simulation: dict = field(default_factory=dict)
    out_dir: Path | None = None

    def sim_config(self) -> SimConfig:
        sim = self.simulation
        rng = sim.get("bin_range")
        weights = sim.get("weights")
        return SimConfig(
            scenario=self.scenario,
            beam=self.beam,
            n_particles=sim.get("n_particles", 100_000),
            weight_mode=WeightMode(sim.get("weight_mode", "uniform")),
            weights=tuple(weights) if weights is not None else None,
            seed=sim.get("seed", 0),
            screen_distance=sim.get("screen_distance", 1.0),
            bins=sim.get("bins", 201),
            bin_range=tuple(rng) if rng is not None else None,
            shards=sim.get("shards", 1),
            boundary_inclusive=self.boundary_inclusive,
            n_planes=self.n_planes,
        )


def _path(err: jsonschema.ValidationError) -> str:
    return ".".join(str(p) for p in err.absolute_path) or "<root>"


def parse_scenario(doc: dict) -> Scenario:
    kind = doc["kind"]
    need = _FIELDS[kind]
    extra = sorted(set(doc) - set(need) - {"kind"})
    if extra:
        raise ConfigError(f"scenario.{extra[0]}: not a field of kind {kind!r}")
    for name in need:
        if name not in doc:
            raise ConfigError(f"scenario.{name}: required for kind {kind!r}")
    try:
        if kind == "laue":
            return Laue(doc["d"])
        if kind == "aperture":
            return Aperture(doc["a"])
        return DoubleSlit(doc["a"], doc["c"])
    except ValueError as exc:
        raise ConfigError(f"scenario: {exc}") from None


def parse_beam(doc: dict, h: float) -> Beam:
    given = [k for k in ("lambda", "p") if k in doc]
    if len(given) != 1:
        raise ConfigError("beam: give exactly one of 'lambda' or 'p'")
    if given[0] == "lambda":
        return Beam(doc["lambda"], h)
    return Beam.from_momentum(doc["p"], h)


def parse(doc, h: float = H_NATURAL) -> RunConfig:
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: [str(p) for p in e.absolute_path])
    if errors:
        raise ConfigError("; ".join(f"{_path(e)}: {e.message}" for e in errors))
    oracle = doc.get("oracle", {})
    return RunConfig(
        scenario=parse_scenario(doc["scenario"]),
        beam=parse_beam(doc["beam"], h),
        raw=doc,
        grid=oracle.get("grid", DEFAULT_GRID),
        tol=oracle.get("tol", DEFAULT_REFINE_TOL),
        n_planes=oracle.get("n_planes", DEFAULT_PLANES),
        simulation=dict(doc.get("simulation", {})),
        out_dir=Path(doc["output"]["dir"]) if "dir" in doc.get("output", {}) else None,
    )


def load(path, h: float = H_NATURAL) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return parse(doc, h)
