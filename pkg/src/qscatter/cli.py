"""``qscatter`` command line.

Exit codes: 0 success, 2 config error, 3 no admissible branch,
4 degenerate branch weights, 5 comparison outside thresholds.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, _kernels
from .config import RunConfig, load
from .ensemble import ConfigError, DegenerateWeightsError, EmptyBranchesError, events, run
from .kinematics import H_NATURAL, H_SI, quantized_angles
from .oracle import compare_scenario, find_extrema, intensity, profile_for

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_EMPTY = 3
EXIT_DEGENERATE = 4
EXIT_MISMATCH = 5

DEFAULT_OUT = "out"


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.17g}"


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


class Outputs:
    """Writes files into one directory and records their digests for the manifest."""

    def __init__(self, directory: Path):
        self.dir = directory
        self.digests = {}

    def write(self, name: str, text: str):
        self.dir.mkdir(parents=True, exist_ok=True)
        data = text.encode("utf-8")
        (self.dir / name).write_bytes(data)
        self.digests[name] = "sha256:" + hashlib.sha256(data).hexdigest()

    def manifest(self, command: str, cfg: RunConfig, started: str, h: float, extra=None):
        doc = {
            "artifact": "qscatter",
            "version": __version__,
            "command": command,
            "config": cfg.raw,
            "resolved": {
                "boundary_inclusive": cfg.boundary_inclusive,
                "grid": cfg.grid,
                "tol": cfg.tol,
                "n_planes": cfg.n_planes,
                "h": h,
                "simulation": cfg.simulation,
            },
            "seed": cfg.simulation.get("seed"),
            "kernel_backend": _kernels.BACKEND,
            "rng": "SplitMix64, counter mode (variate i = mix64(seed + (i + 1) * 0x9E3779B97F4A7C15) >> 11)",
            "started_utc": started,
            "finished_utc": _now(),
            "outputs": dict(sorted(self.digests.items())),
        }
        if extra:
            doc.update(extra)
        text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
        self.dir.mkdir(parents=True, exist_ok=True)
        (self.dir / "manifest.json").write_text(text, encoding="utf-8", newline="\n")


def _out_dir(args, cfg: RunConfig) -> Path:
    if args.out is not None:
        return Path(args.out)
    return cfg.out_dir or Path(DEFAULT_OUT)


ANGLE_HEADER = ["branch", "order", "sin_theta", "theta_rad", "delta_pz"]


def cmd_angles(args, cfg, h, started) -> int:
    branches = quantized_angles(cfg.scenario, cfg.beam, cfg.boundary_inclusive)
    if not branches:
        print("no admissible scattering direction: characteristic length too large for this scatterer", file=sys.stderr)
        return EXIT_EMPTY
    text = csv_text(ANGLE_HEADER, ((b.branch.value, b.order, b.sin_theta, b.theta, b.delta_pz) for b in branches))
    sys.stdout.write(text)
    if args.out is not None or cfg.out_dir is not None:
        out = Outputs(_out_dir(args, cfg))
        out.write("angles.csv", text)
        out.manifest("angles", cfg, started, h)
    return EXIT_OK


def cmd_oracle(args, cfg, h, started) -> int:
    prof = profile_for(cfg.scenario, cfg.beam, cfg.n_planes)
    grid = np.linspace(-1.0, 1.0, cfg.grid)
    curve = intensity(prof, grid)
    extrema = find_extrema(prof, None, cfg.grid, cfg.tol)
    out = Outputs(_out_dir(args, cfg))
    out.write("curve.csv", csv_text(["sin_theta", "intensity"], zip(grid.tolist(), curve.tolist())))
    out.write("extrema.csv", csv_text(["sin_theta", "kind", "value"], ((e.location, e.kind.value, e.value) for e in extrema)))
    out.manifest("oracle", cfg, started, h, {"profile": prof.kind.value})
    print(f"{prof.kind.value}: {len(extrema)} extrema written to {out.dir}")
    return EXIT_OK


def cmd_simulate(args, cfg, h, started) -> int:
    sim = cfg.sim_config()
    res = run(sim)
    out = Outputs(_out_dir(args, cfg))
    hist = res.histogram
    edges = hist.bin_edges.tolist()
    rows = [(-math.inf, edges[0], hist.overflow_low)]
    rows += [(edges[i], edges[i + 1], int(c)) for i, c in enumerate(hist.counts)]
    rows.append((edges[-1], math.inf, hist.overflow_high))
    out.write("histogram.csv", csv_text(["bin_left", "bin_right", "count"], rows))
    out.write(
        "branches.csv",
        csv_text(
            ["branch", "order", "sin_theta", "theta_rad", "screen_x", "weight", "count"],
            (
                (b.branch.value, b.order, b.sin_theta, b.theta, x, w, n)
                for b, x, w, n in zip(res.branches, res.screen_x.tolist(), res.weights.tolist(), res.branch_counts.tolist())
            ),
        ),
    )
    if args.events:
        idx, _, xs = events(sim)
        out.write("events.csv", csv_text(["particle", "branch_index", "screen_x"], zip(range(idx.size), idx.tolist(), xs.tolist())))
    out.manifest("simulate", cfg, started, h, {"seed": sim.seed, "n_particles": sim.n_particles, "shards": sim.shards})
    print(f"{sim.n_particles} particles over {len(res.branches)} branches written to {out.dir}")
    return EXIT_OK


def cmd_compare(args, cfg, h, started) -> int:
    report = compare_scenario(cfg.scenario, cfg.beam, cfg.boundary_inclusive, cfg.grid, cfg.tol, cfg.n_planes)
    if not report.rows:
        print("no admissible scattering direction: nothing to compare", file=sys.stderr)
        return EXIT_EMPTY
    header = ["branch", "order", "sin_theta_quantized", "sin_theta_oracle", "residual", "oracle_kind", "suppressed_flag"]
    rows = (
        (
            r.branch.branch.value,
            r.branch.order,
            r.branch.sin_theta,
            None if r.extremum is None else r.extremum.location,
            r.residual,
            "" if r.extremum is None else r.extremum.kind.value,
            r.suppressed,
        )
        for r in report.rows
    )
    out = Outputs(_out_dir(args, cfg))
    out.write("comparison.csv", csv_text(header, rows))
    out.manifest("compare", cfg, started, h, {"passed": report.ok})
    print(report.summary())
    return EXIT_OK if report.ok else EXIT_MISMATCH


COMMANDS = {
    "angles": cmd_angles,
    "oracle": cmd_oracle,
    "simulate": cmd_simulate,
    "compare": cmd_compare,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, metavar="PATH", help="JSON run configuration")
    common.add_argument("--out", metavar="DIR", help="output directory (overrides output.dir)")
    common.add_argument("--grid", type=int, metavar="N", help="oracle grid points")
    common.add_argument("--tol", type=float, metavar="X", help="oracle refinement tolerance in sin(theta)")
    common.add_argument("--bins", type=int, metavar="N", help="histogram bins")
    common.add_argument("--seed", type=int, metavar="U64", help="simulation seed")
    common.add_argument("--shards", type=int, metavar="N", help="simulation shards")
    common.add_argument("--boundary-inclusive", action="store_true", help="admit |sin(theta)| = 1")
    common.add_argument("--weight-mode", choices=["uniform", "oracle", "table"])
    units = common.add_mutually_exclusive_group()
    units.add_argument("--natural-units", dest="si", action="store_false", help="h = 1 (default)")
    units.add_argument("--si", dest="si", action="store_true", help="h = 6.62607015e-34 J s")
    common.set_defaults(si=False)

    parser = argparse.ArgumentParser(prog="qscatter", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("angles", parents=[common], help="list the quantized scattering directions")
    sub.add_parser("oracle", parents=[common], help="write the wave-optics intensity curve and its extrema")
    p = sub.add_parser("simulate", parents=[common], help="scatter an ensemble and histogram the screen")
    p.add_argument("--events", action="store_true", help="also write one row per particle")
    sub.add_parser("compare", parents=[common], help="match quantized directions to wave-optics extrema")
    return parser


def _apply_overrides(cfg: RunConfig, args):
    if args.boundary_inclusive:
        cfg.boundary_inclusive = True
    if args.grid is not None:
        cfg.grid = args.grid
    if args.tol is not None:
        cfg.tol = args.tol
    for name in ("bins", "seed", "shards", "weight_mode"):
        value = getattr(args, name)
        if value is not None:
            cfg.simulation[name] = value
    if cfg.grid < 1001:
        raise ConfigError(f"--grid must be >= 1001, got {cfg.grid}")
    if not 0 < cfg.tol <= 1e-8:
        raise ConfigError(f"--tol must be in (0, 1e-8], got {cfg.tol}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    started = _now()
    h = H_SI if args.si else H_NATURAL
    try:
        cfg = load(args.config, h)
        _apply_overrides(cfg, args)
        if args.command == "simulate":
            cfg.sim_config()  # validate before any file is written
        return COMMANDS[args.command](args, cfg, h, started)
    except EmptyBranchesError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EMPTY
    except DegenerateWeightsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
