import doctest
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from basketpool import combiner
from basketpool.combiner import (
    CombinationMethod,
    WeightScheme,
    combine,
    combine_many,
    realize_weights,
)
from basketpool.numerics import inv_norm_cdf, uniform_matrix

FISHER = CombinationMethod.FISHER
INVNORM = CombinationMethod.INVERSE_NORMAL

pvals = st.lists(st.floats(1e-12, 1.0), min_size=1, max_size=8)
taus = st.floats(0.01, 1.0)


def test_doctests():
    assert doctest.testmod(combiner).failed == 0


def test_realize_weights_examples():
    assert realize_weights(WeightScheme.equal(), [0, 1, 2, 3]) == [0.5] * 4
    assert realize_weights(WeightScheme.equal(), [1]) == [1.0]
    w = realize_weights(WeightScheme.sample_size([10, 30, 60]), [0, 1])
    assert w == pytest.approx([math.sqrt(10 / 40), math.sqrt(30 / 40)], abs=1e-12)
    assert w == pytest.approx([0.5, 0.8660254], abs=1e-7)
    with pytest.raises(ValueError):
        realize_weights(WeightScheme.equal(), [])


def test_weight_scheme_validation():
    with pytest.raises(ValueError):
        WeightScheme.sample_size([10, 0, 3])
    with pytest.raises(ValueError):
        WeightScheme.sample_size([])
    with pytest.raises(ValueError):
        combine([0.1, 0.2], 0.5, WeightScheme.sample_size([1, 2, 3]))
    assert WeightScheme().descriptor == "equal"
    assert WeightScheme.sample_size([10, 30]).descriptor == "n=10;30"


def test_combine_examples():
    s = combine([0.5], 1.0)
    assert s.value == 0.0 and s.survivors == (0,)
    s = combine([0.025, 0.5], 0.2)
    assert s.survivors == (0,)
    assert s.value == pytest.approx(1.959964, abs=1e-6)
    for method in CombinationMethod:
        for scheme in (WeightScheme(), WeightScheme.sample_size([3, 4])):
            s = combine([0.3, 0.4], 0.2, scheme, method)
            assert s.absent and s.value is None and s.survivors == ()
    assert combine([0.1], 0.2, method=FISHER).value == pytest.approx(4.605170, abs=1e-6)
    assert combine([0.1], 0.2, method="fisher").value == pytest.approx(-2 * math.log(0.1))


def test_survivor_boundary_is_inclusive():
    assert combine([0.2, 0.21], 0.2).survivors == (0,)


def test_invalid_inputs():
    with pytest.raises(ValueError):
        combine([], 0.5)
    with pytest.raises(ValueError):
        combine([0.1], 0.0)
    with pytest.raises(ValueError):
        combine([1.2], 0.5)


def test_sample_size_statistic_by_hand():
    p = [0.01, 0.5, 0.1]
    s = combine(p, 0.2, WeightScheme.sample_size([10, 30, 60]))
    expected = (math.sqrt(10 / 70) * inv_norm_cdf(0.99) + math.sqrt(60 / 70) * inv_norm_cdf(0.9))
    assert s.survivors == (0, 2)
    assert s.value == pytest.approx(expected, abs=1e-12)


@given(pvals, taus, st.sampled_from(list(CombinationMethod)))
def test_weight_constraint(p, tau, method):
    s = combine(p, tau, method=method)
    if s.absent:
        assert all(x > tau for x in p)
    elif method is INVNORM:
        assert abs(sum(w * w for w in s.realized_weights) - 1.0) <= 1e-12
    assert s.survivors == tuple(k for k, x in enumerate(p) if x <= tau)


@given(pvals, taus, st.data())
def test_pruning_consistency(p, tau, data):
    n = data.draw(st.lists(st.floats(1.0, 500.0), min_size=len(p), max_size=len(p)))
    kept = [k for k, x in enumerate(p) if x <= tau]
    for method in CombinationMethod:
        full = combine(p, tau, method=method)
        reduced = combine([p[k] for k in kept], tau, method=method) if kept else None
        if kept:
            assert reduced.value == full.value
        ss_full = combine(p, tau, WeightScheme.sample_size(n), INVNORM)
        if kept:
            ss_red = combine([p[k] for k in kept], tau,
                             WeightScheme.sample_size([n[k] for k in kept]), INVNORM)
            assert ss_red.value == ss_full.value
            assert abs(sum(w * w for w in ss_full.realized_weights) - 1.0) <= 1e-12


@settings(max_examples=50)
@given(st.lists(st.lists(st.floats(1e-9, 1.0), min_size=3, max_size=3), min_size=1, max_size=20),
       taus, st.sampled_from(list(CombinationMethod)), st.booleans())
def test_vectorised_matches_scalar_bitwise(rows, tau, method, sample_size):
    scheme = WeightScheme.sample_size([5, 20, 45]) if sample_size else WeightScheme()
    got = combine_many(np.array(rows), tau, scheme, method)
    for row, g in zip(rows, got):
        s = combine(row, tau, scheme, method)
        if s.absent:
            assert g == -np.inf
        else:
            assert g == s.value


def test_full_pool_is_standard_normal():
    n = 100_000
    crit = inv_norm_cdf(0.95)
    tol = 3 * math.sqrt(0.05 * 0.95 / n)
    for K in (1, 3, 6):
        w = combine_many(uniform_matrix(2024, n, K), 1.0)
        assert abs(np.mean(w > crit) - 0.05) <= tol
