"""Truncated p-value combination statistics.

Only cohorts with ``p_k <= tau`` survive pruning.  The survivors are pooled
either with a weighted inverse-normal sum

    W = sum_k w_k * Phi^{-1}(1 - p_k),   sum_k w_k**2 = 1 over survivors,

or with Fisher's unweighted ``-2 * sum_k log p_k``.  A replicate with no
survivors has no statistic and never rejects.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .numerics import check_prob, clamp_prob, inv_norm_cdf

__all__ = [
    "CombinationMethod",
    "CombinedStatistic",
    "WeightScheme",
    "combine",
    "combine_many",
    "realize_weights",
    "score_matrix",
    "statistics_from_scores",
]


class CombinationMethod(str, enum.Enum):
    INVERSE_NORMAL = "invnorm"
    FISHER = "fisher"


@dataclass(frozen=True)
class WeightScheme:
    """Equal weights (``sample_sizes is None``) or sample-size weights.

    Sample-size weights are ``sqrt(n_k / sum(n_j))`` with the sum taken over
    the surviving cohorts only, so the squared weights always add to one.
    """

    sample_sizes: Optional[tuple] = None

    def __post_init__(self):
        if self.sample_sizes is not None:
            n = tuple(float(x) for x in self.sample_sizes)
            if not n or any(not (x > 0 and math.isfinite(x)) for x in n):
                raise ValueError("sample sizes must be positive and finite")
            object.__setattr__(self, "sample_sizes", n)

    @classmethod
    def equal(cls):
        return cls()

    @classmethod
    def sample_size(cls, n):
        return cls(tuple(n))

    @property
    def is_equal(self):
        return self.sample_sizes is None

    @property
    def descriptor(self):
        if self.is_equal:
            return "equal"
        return "n=" + ";".join(f"{x:g}" for x in self.sample_sizes)

    def check_length(self, K):
        if not self.is_equal and len(self.sample_sizes) != K:
            raise ValueError(
                f"sample-size weights have length {len(self.sample_sizes)}, expected {K}"
            )


@dataclass(frozen=True)
class CombinedStatistic:
    """Result of combining one p-value vector.

    ``survivors`` holds 0-based cohort indices; ``value`` is None when every
    cohort was pruned.
    """

    value: Optional[float]
    survivors: tuple
    realized_weights: tuple

    @property
    def absent(self):
        return self.value is None


def realize_weights(scheme: WeightScheme, survivors: Sequence[int]) -> list:
    """Weights for the surviving cohorts, normalised to unit sum of squares."""
    survivors = list(survivors)
    if not survivors:
        raise ValueError("cannot realise weights for an empty survivor set")
    if scheme.is_equal:
        w = math.sqrt(1.0 / len(survivors))
        return [w] * len(survivors)
    n = [scheme.sample_sizes[k] for k in survivors]
    total = 0.0
    for x in n:
        total += x
    return [math.sqrt(x / total) for x in n]


def combine(p, tau, scheme=WeightScheme(), method=CombinationMethod.INVERSE_NORMAL):
    """Truncated combination of a single p-value vector.

    Examples
    --------
    >>> combine([0.025, 0.5], 0.2).value
    1.959963984540054
    >>> combine([0.3, 0.4], 0.2).absent
    True
    """
    method = CombinationMethod(method)
    p = [float(x) for x in p]
    if not p:
        raise ValueError("need at least one p-value")
    check_prob(p, "p")
    _check_tau(tau)
    scheme.check_length(len(p))

    survivors = tuple(k for k, pk in enumerate(p) if pk <= tau)
    if not survivors:
        return CombinedStatistic(None, (), ())
    scores = score_matrix([p[k] for k in survivors], method)
    value = 0.0
    if method is CombinationMethod.FISHER:
        for s in scores:
            value += float(s)
        return CombinedStatistic(value, survivors, ())

    weights = realize_weights(scheme, survivors)
    for w, s in zip(weights, scores):
        value += w * float(s)
    return CombinedStatistic(value, survivors, tuple(weights))


def _check_tau(tau):
    if not 0.0 < tau <= 1.0:
        raise ValueError(f"tau must lie in (0, 1], got {tau!r}")


def score_matrix(p, method):
    """Per-cohort contribution before weighting.

    ``Phi^{-1}(1 - p)`` (with clamping) for inverse normal, ``-2 log p`` for
    Fisher.  Cached separately from the pruning step so one matrix can serve
    many thresholds.
    """
    p = np.asarray(p, dtype=float)
    if CombinationMethod(method) is CombinationMethod.FISHER:
        return -2.0 * np.log(np.maximum(p, np.finfo(float).tiny))
    return inv_norm_cdf(1.0 - clamp_prob(p), clamp=True)


def statistics_from_scores(p, scores, tau, scheme=WeightScheme(),
                           method=CombinationMethod.INVERSE_NORMAL):
    """Row-wise truncated statistics for an ``(n, K)`` p-value matrix.

    Rows without survivors get ``-inf`` so they fall below every threshold.
    Columns are accumulated left to right, which matches :func:`combine`
    bit for bit.
    """
    method = CombinationMethod(method)
    _check_tau(tau)
    p = np.asarray(p, dtype=float)
    n, K = p.shape
    scheme.check_length(K)
    keep = p <= tau
    m = keep.sum(axis=1)

    out = np.zeros(n)
    # rows with m == 0 produce inf/nan terms here; they are masked out below
    with np.errstate(divide="ignore", invalid="ignore"):
        if method is CombinationMethod.FISHER:
            for k in range(K):
                out += np.where(keep[:, k], scores[:, k], 0.0)
        elif scheme.is_equal:
            w = np.sqrt(1.0 / m)
            for k in range(K):
                out += np.where(keep[:, k], w * scores[:, k], 0.0)
        else:
            n_k = np.asarray(scheme.sample_sizes)
            total = np.zeros(n)
            for k in range(K):
                total += np.where(keep[:, k], n_k[k], 0.0)
            for k in range(K):
                w = np.sqrt(n_k[k] / total)
                out += np.where(keep[:, k], w * scores[:, k], 0.0)
    out[m == 0] = -np.inf
    return out


def combine_many(p, tau, scheme=WeightScheme(), method=CombinationMethod.INVERSE_NORMAL):
    """Vectorised :func:`combine` over the rows of ``p``; absent rows are ``-inf``."""
    p = np.asarray(p, dtype=float)
    check_prob(p, "p")
    return statistics_from_scores(p, score_matrix(p, method), tau, scheme, method)
