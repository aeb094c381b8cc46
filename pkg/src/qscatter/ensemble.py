"""Ensembles of individually scattered particles.

Every particle leaves along exactly one quantized branch; only the histogram
of many arrivals on a flat screen at distance ``L`` shows a pattern.  Branch
probabilities are an input (``weight_mode``) because the quantization rules
fix directions, not intensities.
"""

from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .kinematics import Beam, Scenario, ScatteringBranch, quantized_angles
from .oracle import DEFAULT_PLANES, intensity, profile_for

# oracle intensities below this are treated as exact zeros
ZERO_WEIGHT = 1e-12
DEFAULT_BINS = 201
UINT64_MAX = (1 << 64) - 1


class ConfigError(ValueError):
    pass


class EmptyBranchesError(ConfigError):
    pass


class DegenerateWeightsError(ConfigError):
    pass


class WeightMode(enum.Enum):
    UNIFORM = "uniform"
    ORACLE = "oracle"
    TABLE = "table"


@dataclass(frozen=True)
class SimConfig:
    scenario: Scenario
    beam: Beam
    n_particles: int
    weight_mode: WeightMode = WeightMode.UNIFORM
    weights: tuple[float, ...] | None = None
    seed: int = 0
    screen_distance: float = 1.0
    bins: int = DEFAULT_BINS
    bin_range: tuple[float, float] | None = None
    shards: int = 1
    boundary_inclusive: bool = False
    n_planes: int = DEFAULT_PLANES

    def __post_init__(self):
        if int(self.n_particles) != self.n_particles or self.n_particles < 1:
            raise ConfigError(f"n_particles must be a positive integer, got {self.n_particles!r}")
        if not 0 <= int(self.seed) <= UINT64_MAX:
            raise ConfigError(f"seed must fit in 64 unsigned bits, got {self.seed!r}")
        if not self.screen_distance > 0:
            raise ConfigError(f"screen_distance must be > 0, got {self.screen_distance!r}")
        if self.bins < 2:
            raise ConfigError(f"bins must be >= 2, got {self.bins!r}")
        if self.shards < 1:
            raise ConfigError(f"shards must be >= 1, got {self.shards!r}")
        if self.bin_range is not None and not self.bin_range[0] < self.bin_range[1]:
            raise ConfigError(f"bin_range needs x_min < x_max, got {self.bin_range!r}")
        if self.weight_mode is WeightMode.TABLE:
            if not self.weights:
                raise ConfigError("table weight mode needs a weights list")
            w = np.asarray(self.weights, dtype=float)
            if np.any(w < 0) or not np.all(np.isfinite(w)) or not np.any(w > 0):
                raise ConfigError("table weights must be finite, nonnegative and not all zero")


@dataclass(frozen=True)
class ScatteringEvent:
    branch_index: int
    theta: float
    screen_x: float


@dataclass
class PatternHistogram:
    bin_edges: np.ndarray
    counts: np.ndarray
    overflow_low: int
    overflow_high: int
    total: int


@dataclass
class SimResult:
    branches: list[ScatteringBranch]
    weights: np.ndarray
    branch_counts: np.ndarray
    screen_x: np.ndarray  # one landing point per branch
    histogram: PatternHistogram
    config: SimConfig = field(repr=False)


def screen_position(sin_theta: float, distance: float) -> float:
    """Landing point ``L tan(theta)``; grazing branches land at +-inf."""
    if abs(sin_theta) >= 1.0:
        return math.copysign(math.inf, sin_theta)
    return distance * math.tan(math.asin(sin_theta))


def branch_weights(config: SimConfig, branches: list[ScatteringBranch]) -> np.ndarray:
    """Normalized probability of each branch under ``config.weight_mode``."""
    if not branches:
        raise EmptyBranchesError("no admissible branches")
    k = len(branches)
    mode = config.weight_mode
    if mode is WeightMode.UNIFORM:
        return np.full(k, 1.0 / k)
    if mode is WeightMode.TABLE:
        w = np.asarray(config.weights, dtype=float)
        if w.shape != (k,):
            raise ConfigError(f"table has {w.size} weights but the scenario has {k} branches")
        return w / w.sum()
    prof = profile_for(config.scenario, config.beam, config.n_planes)
    w = np.asarray(intensity(prof, np.array([b.sin_theta for b in branches])), dtype=float)
    w = np.where(w < ZERO_WEIGHT, 0.0, w)
    if np.count_nonzero(w) < min(2, k):
        raise DegenerateWeightsError(
            "oracle weights vanish on all but %d of %d branches (they sit on intensity zeros); "
            "use uniform weights instead" % (np.count_nonzero(w), k)
        )
    return w / w.sum()


def cumulative(weights) -> np.ndarray:
    """CDF used for inverse sampling; pinned to exactly 1 from the last nonzero weight on."""
    w = np.asarray(weights, dtype=float)
    cdf = np.cumsum(w)
    cdf /= cdf[-1]
    cdf[np.flatnonzero(w)[-1] :] = 1.0
    return cdf


def sample_event(u: float, weights, branches: list[ScatteringBranch], distance: float) -> ScatteringEvent:
    """Inverse-CDF draw of one branch from a single uniform variate ``u`` in [0, 1)."""
    cdf = cumulative(weights)
    j = int(np.searchsorted(cdf, u, side="right"))
    j = min(j, len(branches) - 1)
    b = branches[j]
    return ScatteringEvent(j, b.theta, screen_position(b.sin_theta, distance))


def default_bin_range(branches: list[ScatteringBranch], distance: float) -> tuple[float, float]:
    finite = [abs(b.sin_theta) for b in branches if abs(b.sin_theta) < 1.0]
    s_max = max(finite, default=0.0)
    half = distance * math.tan(math.asin(s_max)) * 1.1
    if half == 0.0:
        # only the forward branch: any symmetric window will do
        half = distance
    return -half, half


def build_histogram(screen_x: np.ndarray, counts: np.ndarray, bins: int, bin_range) -> PatternHistogram:
    lo, hi = bin_range
    edges = np.linspace(lo, hi, bins + 1)
    hist = np.zeros(bins, dtype=np.int64)
    low = high = 0
    for x, n in zip(screen_x.tolist(), counts.tolist()):
        if x < lo:
            low += n
        elif x > hi:
            high += n
        else:
            j = min(int(np.searchsorted(edges, x, side="right")) - 1, bins - 1)
            hist[j] += n
    return PatternHistogram(edges, hist, int(low), int(high), int(counts.sum()))


def _prepare(config: SimConfig):
    branches = quantized_angles(config.scenario, config.beam, config.boundary_inclusive)
    if not branches:
        raise EmptyBranchesError(
            "the scenario admits no scattering direction at this characteristic length"
        )
    weights = branch_weights(config, branches)
    return branches, weights, cumulative(weights)


def run(config: SimConfig, workers: int | None = None) -> SimResult:
    """Scatter ``n_particles`` and bin their landing points.

    Particle ``i`` belongs to shard ``i % shards`` and draws its variate from
    its own global index, so the result depends on ``(seed, n_particles)``
    only: shard count and scheduling cannot change it.
    """
    branches, weights, cdf = _prepare(config)
    n, shards = int(config.n_particles), int(config.shards)

    def one(shard):
        return _kernels.count_hits(config.seed, shard, shards, n, cdf)

    if workers is None:
        workers = min(shards, os.cpu_count() or 1)
    if workers > 1 and shards > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(one, range(shards)))
    else:
        parts = [one(s) for s in range(shards)]
    counts = np.sum(parts, axis=0).astype(np.int64)

    xs = np.array([screen_position(b.sin_theta, config.screen_distance) for b in branches])
    rng = config.bin_range or default_bin_range(branches, config.screen_distance)
    hist = build_histogram(xs, counts, config.bins, rng)
    return SimResult(branches, weights, counts, xs, hist, config)


def events(config: SimConfig) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-particle ``(branch_index, theta, screen_x)`` arrays, same draws as :func:`run`."""
    branches, _, cdf = _prepare(config)
    idx = _kernels.branch_indices(config.seed, int(config.n_particles), cdf)
    thetas = np.array([b.theta for b in branches])
    xs = np.array([screen_position(b.sin_theta, config.screen_distance) for b in branches])
    return idx, thetas[idx], xs[idx]


def histogram_cdf_distance(observed, reference) -> float:
    """Sup-norm distance between the CDFs of two count/weight vectors on the same support."""
    obs = np.asarray(observed, dtype=float)
    ref = np.asarray(reference, dtype=float)
    if obs.shape != ref.shape:
        raise ValueError(f"shape mismatch: {obs.shape} vs {ref.shape}")
    e = np.cumsum(obs) / obs.sum()
    r = np.cumsum(ref) / ref.sum()
    return float(np.max(np.abs(e - r)))
