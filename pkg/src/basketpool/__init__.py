"""Calibration and power simulation for prune-and-pool basket trials.

Cohort p-values at or below a pruning threshold ``tau`` are pooled with a
truncated inverse-normal (or Fisher) combination test.  The package finds the
pooled significance level that keeps the overall type I error at ``alpha``
and estimates the design's power.
"""

from .calibration import (
    CalibrationResult,
    DesignSpec,
    Estimate,
    InfeasibleDesign,
    appendix_parity_t1e,
    calibrate,
    exact_t1e,
    simulate_null_implied_pvalues,
    type1_error,
)
from .combiner import (
    CombinationMethod,
    CombinedStatistic,
    WeightScheme,
    combine,
    combine_many,
    realize_weights,
)
from .numerics import RngStream, inv_norm_cdf, norm_cdf, uniform_draw
from .power import (
    PowerResult,
    ScenarioSpec,
    draw_alternative_pvalue,
    overall_power,
    power_given_G,
)
from .sweeps import SweepRow, SweepTable, sweep_alpha_star, sweep_power

__version__ = "0.1.0"
