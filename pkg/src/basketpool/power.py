"""Rejection probability when some cohorts are truly active.

An active cohort with effect ``gamma`` has a test statistic distributed
``N(gamma, 1)``, giving p-values ``Phi(Phi^{-1}(1 - U) - gamma)``.  Cohort
``k`` of replicate ``i`` always consumes the same uniform as in the null
simulation, and the first ``G`` cohorts are the active ones.  Changing ``G``
or ``gamma`` therefore reuses the same draws (common random numbers), and
``G = 0`` or ``gamma = 0`` reproduces the null replicates exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .calibration import (
    _CACHE,
    CalibrationResult,
    DesignSpec,
    Estimate,
    _null_scores,
    calibrate,
    null_pvalues,
    threshold_for,
)
from .combiner import score_matrix, statistics_from_scores
from .numerics import binomial_se, inv_norm_cdf, norm_cdf, uniforms

__all__ = [
    "PowerResult",
    "ScenarioSpec",
    "alternative_pvalues",
    "draw_alternative_pvalue",
    "overall_power",
    "power_given_G",
]


def alternative_pvalues(u, gamma):
    """Transform uniforms into p-values of cohorts with effect ``gamma``.

    With ``V = 1 - u`` playing the role of the uniform in
    ``Phi(Phi^{-1}(1 - V) - gamma)`` this is ``Phi(Phi^{-1}(u) - gamma)``, so
    ``gamma = 0`` returns ``u`` itself.
    """
    u = np.asarray(u, dtype=float)
    gamma = np.broadcast_to(np.asarray(gamma, dtype=float), u.shape)
    if not np.all(np.isfinite(gamma)):
        raise ValueError("gamma must be finite")
    p = norm_cdf(inv_norm_cdf(u, clamp=True) - gamma)
    return np.where(gamma == 0.0, u, p)


def draw_alternative_pvalue(gamma, stream, counter):
    """One alternative p-value from ``stream`` at position ``counter``."""
    u = uniforms(stream.master_seed, stream.stream_index, counter)
    return float(alternative_pvalues(u, gamma)[0])


def _gamma_vector(gamma, K):
    g = np.atleast_1d(np.asarray(gamma, dtype=float))
    if g.size == 1:
        g = np.full(K, g[0])
    if g.size != K:
        raise ValueError(f"gamma must be a scalar or have length K={K}, got {g.size}")
    if not np.all(np.isfinite(g)):
        raise ValueError("gamma must be finite")
    return g


@dataclass(frozen=True)
class ScenarioSpec:
    """A design together with ``G`` active cohorts and their effects.

    ``gamma`` may be a scalar (shared effect) or a sequence of length ``G``
    or ``K``; with length ``K`` the first ``G`` entries are used.
    """

    design: DesignSpec
    G: int
    gamma: object = 2.0

    def __post_init__(self):
        K = self.design.K
        if int(self.G) != self.G or not 0 <= self.G <= K:
            raise ValueError(f"G must be an integer in [0, {K}], got {self.G!r}")
        g = np.atleast_1d(np.asarray(self.gamma, dtype=float))
        if g.size not in (1, self.G, K):
            raise ValueError(f"gamma has length {g.size}; expected 1, G={self.G} or K={K}")
        if not np.all(np.isfinite(g)):
            raise ValueError("gamma must be finite")

    @property
    def active_gammas(self):
        g = np.atleast_1d(np.asarray(self.gamma, dtype=float))
        if g.size == 1:
            return np.full(self.G, g[0])
        return g[: self.G]


@dataclass(frozen=True)
class PowerResult:
    per_G: dict
    overall: float
    alpha_star_used: float
    prior: tuple = ()


def _alt_column(design, k, gamma, workers):
    """Alternative p-values and scores for cohort ``k`` with effect ``gamma``."""
    key = ("alt", design.seed, design.nsim, design.K, design.method.value, k, float(gamma))
    p = _CACHE.get(key + ("p",),
                   lambda: alternative_pvalues(null_pvalues(design, workers)[:, k], gamma))
    s = _CACHE.get(key + ("s",), lambda: score_matrix(p, design.method))
    return p, s


def _scenario_statistics(design, gammas, workers=1):
    p = null_pvalues(design, workers)
    s = _null_scores(design, workers)
    if len(gammas):
        cols = [_alt_column(design, k, g, workers) for k, g in enumerate(gammas)]
        p = np.column_stack([c[0] for c in cols] + [p[:, len(gammas):]])
        s = np.column_stack([c[1] for c in cols] + [s[:, len(gammas):]])
    return statistics_from_scores(p, s, design.tau, design.weights, design.method)


def power_given_G(scenario, calibration: Optional[CalibrationResult] = None, workers=1):
    """Rejection probability ``p(G)`` at the calibrated pooled level.

    The design is calibrated under the global null unless ``calibration`` is
    supplied.  Propagates :class:`InfeasibleDesign`.
    """
    design = scenario.design
    if calibration is None:
        calibration = calibrate(design, workers=workers)
    stats = _scenario_statistics(design, scenario.active_gammas, workers)
    crit = threshold_for(design.method, calibration.alpha_star)
    count = int(np.count_nonzero(stats > crit))
    p = count / design.nsim
    return Estimate(p, binomial_se(p, design.nsim), count)


def _prior_vector(prior, K):
    if prior is None:
        return np.full(K, 1.0 / K)
    w = np.asarray(prior, dtype=float)
    if w.shape != (K,):
        raise ValueError(f"prior over G must have length K={K}, got {w.size}")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("prior over G must be nonnegative")
    if abs(w.sum() - 1.0) > 1e-12:
        raise ValueError(f"prior over G must sum to 1, got {w.sum()!r}")
    return w


def overall_power(design, gamma=2.0, prior=None, calibration=None, workers=1):
    """Prior-weighted average of ``p(G)`` over ``G = 1..K``.

    Parameters
    ----------
    gamma : float or sequence of length K
        Shared effect, or per-cohort effects of which the first ``G`` are used
        when ``G`` cohorts are active.
    prior : sequence of length K, optional
        Probability of ``G = 1..K`` truly active cohorts; uniform by default.
    """
    K = design.K
    gammas = _gamma_vector(gamma, K)
    w = _prior_vector(prior, K)
    if calibration is None:
        calibration = calibrate(design, workers=workers)
    per_G = {}
    overall = 0.0
    for G in range(1, K + 1):
        est = power_given_G(ScenarioSpec(design, G, gammas), calibration, workers)
        per_G[G] = est
        overall += w[G - 1] * est.value
    return PowerResult(per_G, overall, calibration.alpha_star, tuple(float(x) for x in w))
