"""
Checking the simulator against exact answers
============================================

For one or two cohorts the null rejection probability can be written down
and integrated numerically.  The Monte Carlo estimate should agree within its
standard error.  We also replay the reference R loop on a shared uniform
sequence and compare rejection counts exactly.
"""

# %%
from basketpool import DesignSpec, exact_t1e, type1_error

for tau in (0.05, 0.2, 0.5, 1.0):
    for a in (0.01, 0.05):
        exact = exact_t1e(2, tau, a)
        est = type1_error(DesignSpec(2, tau), a)
        print(f"tau={tau:<4} alpha*={a:<4}  exact {exact:.5f}  MC {est.value:.5f}  "
              f"z = {(est.value - exact) / est.se:+.2f}")

# %%
import numpy as np

from basketpool import appendix_parity_t1e

rng = np.random.default_rng(1)
u = rng.random(4 * 10_000)
ref = appendix_parity_t1e(4, 0.25, 0.01, u)
eng = type1_error(DesignSpec(4, 0.25, nsim=10_000), 0.01, uniforms=u)
print(f"reference loop {ref:.4f}, engine {eng.value:.4f}, identical: {ref == eng.value}")

# %%
# Calibration by sorting versus by root finding on the same replicates.
from basketpool import calibrate

spec = DesignSpec(3, 0.2)
for mode in ("quantile", "bisection"):
    r = calibrate(spec, mode=mode)
    print(f"{mode:<9} alpha* = {r.alpha_star:.6f}, achieved {r.achieved_t1e:.5f}")
