"""Time the numba and numpy kernel paths side by side.

    python benchmarks/bench_kernels.py [--particles 10000000] [--repeat 5]

Each kernel is warmed up once (numba compiles on first call) and results
from the two paths are checked for equality before timing is reported.
"""

import argparse
import time

import numpy as np

from qscatter import _kernels
from qscatter.ensemble import SimConfig, WeightMode, _prepare
from qscatter.kinematics import Beam, DoubleSlit
from qscatter.oracle import double_slit, intensity


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--particles", type=int, default=10_000_000)
    ap.add_argument("--grid", type=int, default=2_000_001)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    impls = _kernels.implementations()
    cfg = SimConfig(DoubleSlit(2.0, 10.0), Beam(1.0), args.particles, WeightMode.ORACLE, seed=42)
    _, _, cdf = _prepare(cfg)
    values = intensity(double_slit(2.0, 10.0, 1.0), np.linspace(-1, 1, args.grid))

    cases = {
        f"count_hits ({args.particles:.0e} particles)": lambda k: k["count_hits"](42, 0, 1, args.particles, cdf),
        f"branch_indices ({args.particles:.0e} particles)": lambda k: k["branch_indices"](42, args.particles, cdf),
        f"bracket_sign_changes ({args.grid:.0e} points)": lambda k: k["bracket_sign_changes"](values),
    }

    print(f"{'kernel':<44}" + "".join(f"{name:>12}" for name in impls) + f"{'speedup':>10}")
    for label, call in cases.items():
        results = {name: call(k) for name, k in impls.items()}  # warm-up and parity
        ref = results["numpy"]
        for name, res in results.items():
            pair = zip(res, ref) if isinstance(res, tuple) else [(res, ref)]
            assert all(np.array_equal(a, b) for a, b in pair), f"{name} disagrees with numpy on {label}"
        t = {name: best_of(lambda k=k: call(k), args.repeat) for name, k in impls.items()}
        speed = f"{t['numpy'] / t['numba']:>9.1f}x" if "numba" in t else f"{'-':>10}"
        print(f"{label:<44}" + "".join(f"{t[n] * 1e3:>10.1f}ms" for n in impls) + speed)


if __name__ == "__main__":
    main()
