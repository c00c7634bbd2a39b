import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from basketpool.calibration import DesignSpec, InfeasibleDesign, calibrate, type1_error
from basketpool.numerics import RngStream, uniforms
from basketpool.power import (
    ScenarioSpec,
    _scenario_statistics,
    alternative_pvalues,
    draw_alternative_pvalue,
    overall_power,
    power_given_G,
)
from basketpool.calibration import null_statistics

# Phi(2 - Phi^{-1}(0.95)), evaluated with mpmath
INDIVIDUAL_POWER = 0.6387600313123351


def test_alternative_fixed_uniform():
    assert alternative_pvalues(0.5, 2.0) == pytest.approx(0.02275013194817921, abs=1e-12)


def test_draw_alternative_null_reduction():
    s = RngStream(43, 0)
    for c in range(20):
        assert draw_alternative_pvalue(0.0, s, c) == s.uniform(c)
    u = uniforms(43, np.arange(1_000_000, dtype=np.uint64), 0)
    assert abs(alternative_pvalues(u, 0.0).mean() - 0.5) <= 0.002


def test_draw_alternative_individual_power():
    u = uniforms(43, np.arange(1_000_000, dtype=np.uint64), 0)
    frac = np.mean(alternative_pvalues(u, 2.0) < 0.05)
    assert abs(frac - INDIVIDUAL_POWER) <= 0.002


@given(st.floats(1e-12, 1 - 1e-12), st.floats(0.0, 5.0), st.floats(0.01, 5.0))
def test_alternative_decreasing_in_gamma(u, g, dg):
    a = alternative_pvalues(u, g)
    b = alternative_pvalues(u, g + dg)
    # strict unless both have underflowed to zero
    assert b < a or (a == 0.0 and b == 0.0)


def test_alternative_rejects_non_finite_gamma():
    with pytest.raises(ValueError):
        alternative_pvalues([0.5], math.inf)


def test_scenario_validation():
    d = DesignSpec(3, 0.2)
    with pytest.raises(ValueError):
        ScenarioSpec(d, 4)
    with pytest.raises(ValueError):
        ScenarioSpec(d, 2, [1.0, 2.0, 3.0, 4.0])
    assert list(ScenarioSpec(d, 2, [1.0, 2.0, 3.0]).active_gammas) == [1.0, 2.0]
    assert list(ScenarioSpec(d, 2, [1.0, 3.0]).active_gammas) == [1.0, 3.0]


def test_power_g0_is_type1_error():
    d = DesignSpec(4, 0.2)
    cal = calibrate(d)
    est = power_given_G(ScenarioSpec(d, 0), cal)
    assert est.value == cal.achieved_t1e
    assert abs(est.value - 0.05) <= 1 / d.nsim


def test_null_reduction_replicate_by_replicate():
    d = DesignSpec(5, 0.3)
    a = _scenario_statistics(d, np.zeros(3))
    b = null_statistics(d)
    assert a.tobytes() == b.tobytes()
    cal = calibrate(d)
    est = power_given_G(ScenarioSpec(d, 3, 0.0), cal)
    assert est.count == type1_error(d, cal.alpha_star).count


def test_power_single_cohort_matches_individual_power():
    est = power_given_G(ScenarioSpec(DesignSpec(1, 0.2), 1, 2.0))
    assert abs(est.value - 0.639) <= 3 * est.se


def test_pooling_beats_single_cohort():
    est = power_given_G(ScenarioSpec(DesignSpec(5, 0.2), 5, 2.0))
    single = power_given_G(ScenarioSpec(DesignSpec(1, 0.2), 1, 2.0))
    assert est.value > single.value > 0.6


@pytest.mark.parametrize("K", [1, 2, 4, 6])
@pytest.mark.parametrize("tau", [0.1, 0.3, 1.0])
def test_dominance_over_null(K, tau):
    d = DesignSpec(K, tau, nsim=30_000)
    res = overall_power(d, 2.0)
    for G, est in res.per_G.items():
        assert est.value >= d.alpha + 10 * est.se


def test_overall_power_prior_weighting():
    d = DesignSpec(4, 0.2)
    uniform = overall_power(d, 2.0)
    assert uniform.overall == pytest.approx(np.mean([e.value for e in uniform.per_G.values()]),
                                            abs=1e-12)
    point = overall_power(d, 2.0, prior=[0, 0, 0, 1])
    assert point.overall == uniform.per_G[4].value
    w = [0.1, 0.2, 0.3, 0.4]
    weighted = overall_power(d, 2.0, prior=w)
    assert weighted.overall == pytest.approx(sum(wi * weighted.per_G[g].value
                                                 for g, wi in zip(range(1, 5), w)), abs=1e-12)
    assert weighted.alpha_star_used == calibrate(d).alpha_star


def test_overall_power_k1_single_term():
    d = DesignSpec(1, 0.2)
    assert overall_power(d, 2.0).overall == power_given_G(ScenarioSpec(d, 1, 2.0)).value


def test_overall_power_null_effect():
    d = DesignSpec(4, 0.2)
    res = overall_power(d, 0.0)
    assert abs(res.overall - 0.05) <= 3 * math.sqrt(0.05 * 0.95 / d.nsim)


def test_heterogeneous_effects_use_first_entries():
    d = DesignSpec(3, 0.2)
    cal = calibrate(d)
    res = overall_power(d, [3.0, 0.0, 0.0], calibration=cal)
    p1 = power_given_G(ScenarioSpec(d, 1, 3.0), cal).value
    # cohorts 2 and 3 carry no effect, so every G sees the same draws
    assert all(e.value == p1 for e in res.per_G.values())


def test_overall_power_argument_errors():
    d = DesignSpec(3, 0.2)
    with pytest.raises(ValueError):
        overall_power(d, 2.0, prior=[0.5, 0.5])
    with pytest.raises(ValueError):
        overall_power(d, 2.0, prior=[0.5, 0.5, 0.5])
    with pytest.raises(ValueError):
        overall_power(d, 2.0, prior=[-0.5, 1.0, 0.5])
    with pytest.raises(ValueError):
        overall_power(d, [1.0, 2.0])
    with pytest.raises(InfeasibleDesign):
        overall_power(DesignSpec(1, 0.03), 2.0)
    with pytest.raises(InfeasibleDesign):
        power_given_G(ScenarioSpec(DesignSpec(2, 0.01), 1))


def test_power_increases_with_gamma_under_crn():
    d = DesignSpec(3, 0.2)
    cal = calibrate(d)
    values = [power_given_G(ScenarioSpec(d, 2, g), cal).value for g in (0.5, 1.0, 2.0, 3.0)]
    assert values == sorted(values)
    assert values[-1] > 0.9
