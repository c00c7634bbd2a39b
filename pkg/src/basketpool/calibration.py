"""Type I error estimation and calibration of the pooled-analysis level.

Under the global null every cohort p-value is an independent uniform.  For a
design ``(K, tau, method, weights)`` the simulator draws ``nsim`` replicates,
computes the truncated statistic of each one, and then

* ``type1_error`` counts replicates whose statistic exceeds the threshold
  implied by a given pooled level ``alpha_star``;
* ``calibrate`` picks ``alpha_star`` so that exactly ``floor(alpha * nsim)``
  replicates reject.

Replicate ``i`` always uses stream ``i`` of the design seed and cohort ``k``
uses counter ``k``, so designs sharing ``(seed, nsim, K)`` share their draws.
"""

from __future__ import annotations

import math
import threading
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from scipy import integrate, optimize

from .combiner import (
    CombinationMethod,
    WeightScheme,
    score_matrix,
    statistics_from_scores,
)
from .numerics import binomial_se, inv_norm_cdf, norm_sf, uniform_matrix

__all__ = [
    "CalibrationResult",
    "DesignSpec",
    "Estimate",
    "InfeasibleDesign",
    "appendix_parity_t1e",
    "calibrate",
    "exact_t1e",
    "implied_pvalues",
    "null_pvalues",
    "null_statistics",
    "simulate_null_implied_pvalues",
    "threshold_for",
    "type1_error",
]

DEFAULT_NSIM = 100_000
DEFAULT_SEED = 43


class InfeasibleDesign(ValueError):
    """No pooled level reaches ``alpha``: too many null replicates prune everything."""

    def __init__(self, alpha, ceiling):
        self.alpha = alpha
        self.ceiling = ceiling
        super().__init__(
            f"type I error {alpha:g} is unattainable; the design can reach at most {ceiling:.6g}"
        )


class Estimate(NamedTuple):
    value: float
    se: float
    count: int = 0


@dataclass(frozen=True)
class DesignSpec:
    K: int
    tau: float
    alpha: float = 0.05
    method: CombinationMethod = CombinationMethod.INVERSE_NORMAL
    weights: WeightScheme = field(default_factory=WeightScheme)
    nsim: int = DEFAULT_NSIM
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        object.__setattr__(self, "method", CombinationMethod(self.method))
        if int(self.K) != self.K or self.K < 1:
            raise ValueError(f"K must be a positive integer, got {self.K!r}")
        if not 0.0 < self.tau <= 1.0:
            raise ValueError(f"tau must lie in (0, 1], got {self.tau!r}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha!r}")
        if int(self.nsim) != self.nsim or self.nsim < 1:
            raise ValueError(f"nsim must be a positive integer, got {self.nsim!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        self.weights.check_length(self.K)

    @property
    def ceiling(self):
        """Largest attainable type I error, ``1 - (1 - tau)**K``."""
        if self.tau >= 1.0:
            return 1.0
        return -math.expm1(self.K * math.log1p(-self.tau))

    @property
    def feasible(self):
        return self.alpha <= self.ceiling


@dataclass(frozen=True)
class CalibrationResult:
    """Calibrated pooled level.

    For the inverse-normal method ``w_star`` is the critical value of the
    combined statistic and ``alpha_star = 1 - Phi(w_star)``.  Fisher has no
    normal-scale reading: ``w_star`` is None, ``critical_value`` is the
    threshold on ``-2 sum log p`` and ``alpha_star`` the matching threshold on
    the product of surviving p-values.
    """

    alpha_star: float
    w_star: Optional[float]
    critical_value: float
    achieved_t1e: float
    mc_standard_error: float
    nsim: int
    feasible: bool = True
    mode: str = "quantile"


# -- cached null draws ----------------------------------------------------------

class _ArrayCache:
    """Small thread-safe LRU of read-only arrays."""

    def __init__(self, maxsize=96):
        self.maxsize = maxsize
        self._data = OrderedDict()
        self._lock = threading.Lock()

    def get(self, key, build):
        with self._lock:
            if key in self._data:
                self._data.move_to_end(key)
                return self._data[key]
        value = build()
        value.setflags(write=False)
        with self._lock:
            self._data[key] = value
            while len(self._data) > self.maxsize:
                self._data.popitem(last=False)
        return value

    def clear(self):
        with self._lock:
            self._data.clear()


_CACHE = _ArrayCache()


def null_pvalues(spec, workers=1):
    """``(nsim, K)`` matrix of null p-values for ``spec`` (read-only, cached).

    The worker count only affects how the draws are evaluated.
    """
    key = ("null", spec.seed, spec.nsim, spec.K)
    return _CACHE.get(key, lambda: uniform_matrix(spec.seed, spec.nsim, spec.K, workers=workers))


def _null_scores(spec, workers=1):
    key = ("null-score", spec.seed, spec.nsim, spec.K, spec.method.value)
    return _CACHE.get(key, lambda: score_matrix(null_pvalues(spec, workers), spec.method))


def null_statistics(spec, workers=1):
    """Truncated statistic per null replicate; ``-inf`` where everything was pruned."""
    return statistics_from_scores(
        null_pvalues(spec, workers), _null_scores(spec, workers),
        spec.tau, spec.weights, spec.method,
    )


def threshold_for(method, alpha_star):
    """Statistic-scale rejection threshold for a pooled level ``alpha_star``.

    Inverse normal rejects when ``W > Phi^{-1}(1 - alpha_star)``; Fisher when
    ``-2 sum log p > -2 log alpha_star``, i.e. when the product of surviving
    p-values falls below ``alpha_star``.
    """
    if not 0.0 <= alpha_star <= 1.0:
        raise ValueError(f"alpha_star must lie in [0, 1], got {alpha_star!r}")
    if alpha_star == 0.0:
        return math.inf
    if CombinationMethod(method) is CombinationMethod.FISHER:
        return -2.0 * math.log(alpha_star)
    if alpha_star == 1.0:
        return -math.inf
    return inv_norm_cdf(1.0 - alpha_star)


def implied_pvalues(stats, method):
    """Map statistics to the ``alpha_star`` scale; absent rows map to 1.

    For inverse normal this is ``1 - Phi(W)``.  For Fisher it is the product
    of surviving p-values, a decreasing function of the statistic.
    """
    stats = np.asarray(stats, dtype=float)
    if CombinationMethod(method) is CombinationMethod.FISHER:
        q = np.exp(-0.5 * stats)
    else:
        q = norm_sf(stats)
    return np.where(np.isneginf(stats), 1.0, q)


def simulate_null_implied_pvalues(spec, workers=1):
    """Implied pooled p-value ``q_i`` of each null replicate."""
    return implied_pvalues(null_statistics(spec, workers), spec.method)


def _rejections(stats, method, alpha_star):
    return int(np.count_nonzero(stats > threshold_for(method, alpha_star)))


def type1_error(spec, alpha_star, workers=1, uniforms=None):
    """Monte Carlo type I error of ``spec`` at pooled level ``alpha_star``.

    Parameters
    ----------
    uniforms : array_like, optional
        Externally supplied uniforms of length ``K * nsim``, consumed row by
        row as ``p = 1 - U`` (the reference R code's convention).  Used for
        differential testing against :func:`appendix_parity_t1e`.
    """
    if uniforms is None:
        stats = null_statistics(spec, workers)
    else:
        u = np.asarray(uniforms, dtype=float)
        if u.size != spec.K * spec.nsim:
            raise ValueError(f"expected {spec.K * spec.nsim} uniforms, got {u.size}")
        p = 1.0 - u.reshape(spec.nsim, spec.K)
        stats = statistics_from_scores(
            p, score_matrix(p, spec.method), spec.tau, spec.weights, spec.method
        )
    count = _rejections(stats, spec.method, alpha_star)
    t = count / spec.nsim
    return Estimate(t, binomial_se(t, spec.nsim), count)


# -- calibration -------------------------------------------------------------------

def calibrate(spec, mode="quantile", workers=1):
    """Calibrate the pooled level so the overall type I error equals ``spec.alpha``.

    ``mode="quantile"`` sorts the implied p-values and takes ``alpha_star``
    halfway between the ``k``-th and ``(k+1)``-th smallest, ``k =
    floor(alpha * nsim)``.  ``mode="bisection"`` root-solves
    ``type1_error(alpha_star) = alpha`` on the same replicates, the way the
    reference R code does with ``uniroot``.

    Raises
    ------
    InfeasibleDesign
        If ``alpha`` exceeds ``1 - (1 - tau)**K``, or the simulated replicates
        have too few survivors to reach it.
    """
    if not spec.feasible:
        raise InfeasibleDesign(spec.alpha, spec.ceiling)
    stats = null_statistics(spec, workers)
    q = implied_pvalues(stats, spec.method)
    n = spec.nsim
    k = int(math.floor(spec.alpha * n + 1e-9))
    n_present = int(np.count_nonzero(np.isfinite(stats)))
    if n_present < k:
        raise InfeasibleDesign(spec.alpha, n_present / n)

    if mode == "quantile":
        if k == 0:
            lo = 0.0
            hi = float(np.min(q))
        else:
            part = np.partition(q, [k - 1, k]) if k < n else np.sort(q)
            lo = float(part[k - 1])
            hi = float(part[k]) if k < n else 1.0
        alpha_star = 0.5 * (lo + hi)
    elif mode == "bisection":
        def excess(a):
            return _rejections(stats, spec.method, a) / n - spec.alpha

        alpha_star = optimize.brentq(excess, 0.0, 1.0, xtol=1e-14, rtol=4 * np.finfo(float).eps,
                                     maxiter=500)
    else:
        raise ValueError(f"unknown calibration mode {mode!r}")

    crit = threshold_for(spec.method, alpha_star)
    count = _rejections(stats, spec.method, alpha_star)
    t = count / n
    w_star = crit if spec.method is CombinationMethod.INVERSE_NORMAL else None
    return CalibrationResult(
        alpha_star=alpha_star,
        w_star=w_star,
        critical_value=crit,
        achieved_t1e=t,
        mc_standard_error=binomial_se(t, n),
        nsim=n,
        feasible=True,
        mode=mode,
    )


# -- oracles ----------------------------------------------------------------------

def exact_t1e(K, tau, alpha_star, method=CombinationMethod.INVERSE_NORMAL):
    """Exact null rejection probability for ``K`` in {1, 2} with equal weights.

    For two cohorts the rejection probability splits into "one survivor" and
    "both survive"; the latter is a one-dimensional integral over the first
    p-value, evaluated with adaptive quadrature.
    """
    if CombinationMethod(method) is not CombinationMethod.INVERSE_NORMAL:
        raise ValueError("exact_t1e supports the inverse-normal method only")
    if K not in (1, 2):
        raise ValueError(f"exact_t1e supports K in {{1, 2}}, got {K!r}")
    if not 0.0 < tau <= 1.0 or not 0.0 <= alpha_star <= 1.0:
        raise ValueError("tau must lie in (0, 1] and alpha_star in [0, 1]")
    single = min(tau, alpha_star)
    if K == 1:
        return single
    if alpha_star == 0.0:
        return 0.0
    w_star = inv_norm_cdf(1.0 - alpha_star, clamp=True)
    r2 = math.sqrt(2.0)

    def inner(p1):
        if p1 <= 0.0:
            return tau
        z1 = inv_norm_cdf(1.0 - p1, clamp=True)
        return min(tau, norm_sf(r2 * w_star - z1))

    points = None
    if tau < 1.0:
        kink = norm_sf(r2 * w_star - inv_norm_cdf(1.0 - tau))
        if 0.0 < kink < tau:
            points = [kink]
    both, _ = integrate.quad(inner, 0.0, tau, points=points, epsabs=1e-11, epsrel=1e-11,
                             limit=200)
    return 2.0 * single * (1.0 - tau) + both


def appendix_parity_t1e(K, tau, alpha_star, uniforms):
    """Line-by-line port of the reference R type I error loop.

    Replicate ``i`` takes ``uniforms[i*K:(i+1)*K]`` as ``runif(K)`` and uses
    ``p = 1 - U``; cohorts with ``p <= tau`` are pooled with weights
    ``sqrt(1/m)``, and the replicate rejects on ``w > qnorm(1 - alpha_star)``.
    Returns the rejection fraction.
    """
    u = [float(x) for x in np.ravel(uniforms)]
    if K < 1 or len(u) % K:
        raise ValueError(f"uniform sequence length {len(u)} is not a multiple of K={K}")
    nsim = len(u) // K
    if nsim == 0:
        raise ValueError("need at least one replicate")
    crit = inv_norm_cdf(1.0 - alpha_star) if 0.0 < alpha_star < 1.0 else (
        math.inf if alpha_star == 0.0 else -math.inf)
    sig = 0
    for sim in range(nsim):
        p_values = [1.0 - x for x in u[sim * K:(sim + 1) * K]]
        p_values = [p for p in p_values if p <= tau]
        if len(p_values) > 0:
            w = 0.0
            for p in p_values:
                w += math.sqrt(1.0 / len(p_values)) * inv_norm_cdf(1.0 - p, clamp=True)
            sig += int(w > crit)
    return sig / nsim
