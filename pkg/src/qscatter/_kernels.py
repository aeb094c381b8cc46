"""Inner loops shared by the oracle scan and the ensemble sampler.

Each kernel exists twice: a numba ``@njit`` loop and a vectorised numpy
version producing bit-identical results.  The numba path is used when numba
imports cleanly and ``QSCATTER_DISABLE_NUMBA`` is unset (or ``0``); set it to
``1`` to force pure numpy.

Random numbers come from SplitMix64 evaluated in counter mode: the uniform
for particle ``i`` is ``mix64(seed + (i + 1) * 0x9E3779B97F4A7C15) >> 11``
scaled by 2**-53, which is the ``i``-th output of a SplitMix64 generator
seeded with ``seed``.  Any particle's variate can be computed directly, so
the assignment of particles to shards never changes the draws.
"""

from __future__ import annotations

import os

import numpy as np

GAMMA = np.uint64(0x9E3779B97F4A7C15)
MIX1 = np.uint64(0xBF58476D1CE4E5B9)
MIX2 = np.uint64(0x94D049BB133111EB)
TWO_POW_M53 = 2.0**-53
_S11 = np.uint64(11)
_S27 = np.uint64(27)
_S30 = np.uint64(30)
_S31 = np.uint64(31)

# numpy path works on this many particles at a time
CHUNK = 1 << 20


def _numba_requested() -> bool:
    flag = os.environ.get("QSCATTER_DISABLE_NUMBA", "").strip().lower()
    return flag in ("", "0", "false", "no")


try:
    if not _numba_requested():
        raise ImportError("numba disabled by QSCATTER_DISABLE_NUMBA")
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

BACKEND = "numba" if HAVE_NUMBA else "numpy"


# ---------------------------------------------------------------- numpy path


def uniforms_numpy(seed: int, start: int, step: int, count: int) -> np.ndarray:
    """Variates for particles ``start, start + step, ...`` (``count`` of them)."""
    idx = np.uint64(start) + np.uint64(step) * np.arange(count, dtype=np.uint64)
    z = np.uint64(seed) + (idx + np.uint64(1)) * GAMMA
    z = (z ^ (z >> _S30)) * MIX1
    z = (z ^ (z >> _S27)) * MIX2
    z = z ^ (z >> _S31)
    return (z >> _S11).astype(np.float64) * TWO_POW_M53


def _shard_size(n_total: int, start: int, step: int) -> int:
    if start >= n_total:
        return 0
    return (n_total - 1 - start) // step + 1


def count_hits_numpy(seed, start, step, n_total, cdf):
    k = cdf.shape[0]
    out = np.zeros(k, dtype=np.int64)
    size = _shard_size(n_total, start, step)
    done = 0
    while done < size:
        m = min(CHUNK, size - done)
        u = uniforms_numpy(seed, start + done * step, step, m)
        j = np.searchsorted(cdf, u, side="right")
        out += np.bincount(j, minlength=k)[:k]
        done += m
    return out


def branch_indices_numpy(seed, n_total, cdf):
    out = np.empty(n_total, dtype=np.int64)
    for lo in range(0, n_total, CHUNK):
        m = min(CHUNK, n_total - lo)
        out[lo : lo + m] = np.searchsorted(cdf, uniforms_numpy(seed, lo, 1, m), side="right")
    return out


def bracket_sign_changes_numpy(values):
    sgn = np.sign(np.diff(values))
    nz = np.flatnonzero(sgn)
    s = sgn[nz]
    ch = np.flatnonzero(s[1:] != s[:-1])
    return nz[ch].astype(np.int64), (nz[ch + 1] + 1).astype(np.int64), s[ch] > 0


# ---------------------------------------------------------------- numba path

if HAVE_NUMBA:

    @njit(cache=True, nogil=True)
    def _uniform_nb(seed, i):
        z = seed + (np.uint64(i) + np.uint64(1)) * GAMMA
        z = (z ^ (z >> _S30)) * MIX1
        z = (z ^ (z >> _S27)) * MIX2
        z = z ^ (z >> _S31)
        return np.float64(z >> _S11) * TWO_POW_M53

    @njit(cache=True, nogil=True)
    def _first_above(cdf, u):
        lo = 0
        hi = cdf.shape[0] - 1
        while lo < hi:
            mid = (lo + hi) >> 1
            if cdf[mid] > u:
                hi = mid
            else:
                lo = mid + 1
        return lo

    @njit(cache=True, nogil=True)
    def _count_hits_nb(seed, start, step, n_total, cdf, out):
        s = np.uint64(seed)
        i = start
        while i < n_total:
            out[_first_above(cdf, _uniform_nb(s, i))] += 1
            i += step

    @njit(cache=True, nogil=True)
    def _branch_indices_nb(seed, cdf, out):
        s = np.uint64(seed)
        for i in range(out.shape[0]):
            out[i] = _first_above(cdf, _uniform_nb(s, i))

    @njit(cache=True, nogil=True)
    def _bracket_nb(values, lo, hi, is_max):
        m = 0
        last_sign = 0
        last_idx = -1
        for i in range(values.shape[0] - 1):
            d = values[i + 1] - values[i]
            if d > 0:
                sgn = 1
            elif d < 0:
                sgn = -1
            else:
                continue
            if last_sign != 0 and sgn != last_sign:
                lo[m] = last_idx
                hi[m] = i + 1
                is_max[m] = last_sign > 0
                m += 1
            last_sign = sgn
            last_idx = i
        return m

    def count_hits_numba(seed, start, step, n_total, cdf):
        out = np.zeros(cdf.shape[0], dtype=np.int64)
        _count_hits_nb(np.uint64(seed), start, step, n_total, cdf, out)
        return out

    def branch_indices_numba(seed, n_total, cdf):
        out = np.empty(n_total, dtype=np.int64)
        _branch_indices_nb(np.uint64(seed), cdf, out)
        return out

    def bracket_sign_changes_numba(values):
        n = max(values.shape[0] - 1, 0)
        lo = np.empty(n, dtype=np.int64)
        hi = np.empty(n, dtype=np.int64)
        is_max = np.empty(n, dtype=np.bool_)
        m = _bracket_nb(values, lo, hi, is_max)
        return lo[:m], hi[:m], is_max[:m]

    count_hits = count_hits_numba
    branch_indices = branch_indices_numba
    bracket_sign_changes = bracket_sign_changes_numba
else:
    count_hits = count_hits_numpy
    branch_indices = branch_indices_numpy
    bracket_sign_changes = bracket_sign_changes_numpy


def implementations() -> dict[str, dict[str, object]]:
    """Kernel tables keyed by backend name, for benchmarks and parity tests."""
    table = {
        "numpy": {
            "count_hits": count_hits_numpy,
            "branch_indices": branch_indices_numpy,
            "bracket_sign_changes": bracket_sign_changes_numpy,
        }
    }
    if HAVE_NUMBA:
        table["numba"] = {
            "count_hits": count_hits_numba,
            "branch_indices": branch_indices_numba,
            "bracket_sign_changes": bracket_sign_changes_numba,
        }
    return table
