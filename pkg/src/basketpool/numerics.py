"""Normal CDF/quantile helpers and counter-based uniform streams.

Every uniform used by the simulators is a pure function of
``(master_seed, stream_index, counter)``.  One stream is assigned per Monte
Carlo replicate, so splitting the replicates across any number of workers
reproduces the same draws bit for bit.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import special

__all__ = [
    "P_CLAMP",
    "RngStream",
    "binomial_se",
    "check_prob",
    "clamp_prob",
    "inv_norm_cdf",
    "norm_cdf",
    "norm_sf",
    "replicate_chunks",
    "uniform_draw",
    "uniform_matrix",
    "uniforms",
]

P_CLAMP = 1e-15

_MASK64 = (1 << 64) - 1
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_STREAM_GAMMA = np.uint64(0xD1B54A32D192ED03)
_SEED_SALT = np.uint64(0x5851F42D4C957F2D)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def check_prob(x, name="value"):
    """Validate that ``x`` (scalar or array) lies in [0, 1]."""
    arr = np.asarray(x, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < 0.0) or np.any(arr > 1.0):
        raise ValueError(f"{name} must lie in [0, 1], got {x!r}")
    return x


def clamp_prob(p):
    """Clamp probabilities to ``[P_CLAMP, 1 - P_CLAMP]``."""
    return np.clip(p, P_CLAMP, 1.0 - P_CLAMP)


def norm_cdf(z):
    """Standard normal CDF.  Saturates to 0/1 in the far tails."""
    out = special.ndtr(z)
    return float(out) if np.ndim(out) == 0 else out


def norm_sf(z):
    """Upper tail ``1 - Phi(z)`` without cancellation for large ``z``."""
    out = special.ndtr(np.negative(z))
    return float(out) if np.ndim(out) == 0 else out


def inv_norm_cdf(p, clamp=False):
    """Standard normal quantile function.

    Parameters
    ----------
    p : float or array_like
        Probabilities in (0, 1).
    clamp : bool
        If True, ``p`` is first clamped to ``[P_CLAMP, 1 - P_CLAMP]`` so that 0
        and 1 map to finite values.  Otherwise 0 and 1 raise ``ValueError``.
    """
    arr = np.asarray(p, dtype=float)
    check_prob(arr, "p")
    if clamp:
        arr = clamp_prob(arr)
    elif np.any((arr == 0.0) | (arr == 1.0)):
        raise ValueError("inv_norm_cdf is infinite at 0 and 1; pass clamp=True")
    out = special.ndtri(arr)
    return float(out) if out.ndim == 0 else out


def _mix64(z):
    # splitmix64 finalizer; uint64 arithmetic wraps mod 2**64
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def _stream_keys(master_seed, stream_index):
    seed = np.uint64(int(master_seed) & _MASK64)
    streams = np.asarray(stream_index, dtype=np.uint64)
    with np.errstate(over="ignore"):
        base = _mix64(np.atleast_1d(seed ^ _SEED_SALT))
        return _mix64(base + streams * _STREAM_GAMMA)


def uniforms(master_seed, stream_index, counter):
    """Vectorised uniforms on (0, 1) for broadcastable stream/counter arrays.

    Each stream is a splitmix64 sequence keyed by a hash of
    ``(master_seed, stream_index)``; ``counter`` indexes into it.  Values are
    ``(k + 0.5) / 2**52`` for a 52-bit integer ``k``, so never 0 or 1.
    """
    keys = _stream_keys(master_seed, stream_index)
    counters = np.asarray(counter, dtype=np.uint64)
    with np.errstate(over="ignore"):
        x = _mix64(keys + (counters + np.uint64(1)) * _GOLDEN)
    return ((x >> np.uint64(12)).astype(np.float64) + 0.5) * 2.0**-52


@dataclass(frozen=True)
class RngStream:
    """Immutable token naming one substream of a master seed."""

    master_seed: int
    stream_index: int

    def __post_init__(self):
        for name in ("master_seed", "stream_index"):
            v = getattr(self, name)
            if not 0 <= int(v) <= _MASK64:
                raise ValueError(f"{name} must be a 64-bit unsigned integer")

    def uniform(self, counter):
        return uniform_draw(self, counter)


def uniform_draw(stream, counter):
    """Single deterministic uniform from ``stream`` at position ``counter``."""
    return float(uniforms(stream.master_seed, stream.stream_index, counter)[0])


def replicate_chunks(nsim, workers):
    """Split ``range(nsim)`` into at most ``workers`` contiguous slices."""
    workers = max(1, min(int(workers), nsim))
    edges = np.linspace(0, nsim, workers + 1).astype(int)
    return [slice(a, b) for a, b in zip(edges[:-1], edges[1:])]


def uniform_matrix(master_seed, nsim, K, start=0, workers=1):
    """``(nsim, K)`` uniforms: row ``i`` is stream ``start + i``, column ``k`` counter ``k``.

    ``workers`` only changes how the rows are partitioned for evaluation.
    """
    cols = np.arange(K, dtype=np.uint64)[None, :]

    def block(sl):
        rows = np.arange(start + sl.start, start + sl.stop, dtype=np.uint64)[:, None]
        return uniforms(master_seed, rows, cols)

    chunks = replicate_chunks(nsim, workers)
    if len(chunks) == 1:
        return block(chunks[0])
    with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
        parts = list(pool.map(block, chunks))
    return np.concatenate(parts, axis=0)


def binomial_se(p_hat, n):
    """Monte Carlo standard error of a proportion."""
    return math.sqrt(max(p_hat * (1.0 - p_hat), 0.0) / n)
