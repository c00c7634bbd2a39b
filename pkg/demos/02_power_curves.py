"""
Overall power versus pruning threshold
======================================

Active cohorts have statistics distributed N(gamma, 1); gamma = 2 gives each
cohort about 64% power on its own at the one-sided 5% level.  Overall power
averages the rejection probability over G = 1..K active cohorts.
"""

# %%
from basketpool import DesignSpec, overall_power

design = DesignSpec(K=5, tau=0.2)
res = overall_power(design, gamma=2.0)
for G, est in res.per_G.items():
    print(f"G={G}: p(G) = {est.value:.4f} (se {est.se:.4f})")
print(f"overall power {res.overall:.4f} at alpha* = {res.alpha_star_used:.5f}")

# %%
# A prior that believes one or two active cohorts are most likely.
res = overall_power(design, gamma=2.0, prior=[0.4, 0.3, 0.15, 0.1, 0.05])
print(f"prior-weighted power {res.overall:.4f}")

# %%
# Different effects per cohort: the first G entries are the active ones.
res = overall_power(design, gamma=[2.5, 2.0, 1.5, 1.0, 0.5])
print(f"heterogeneous effects: overall power {res.overall:.4f}")

# %%
# The power curves peak where alpha* bottoms out.
import numpy as np

from basketpool.sweeps import sweep_power

taus = [0.02, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.4, 0.6, 0.8, 1.0]
table = sweep_power([2, 4, 6], taus, gamma=2.0, nsim=50_000)
for K in (2, 4, 6):
    t, v = table.curve(K)
    print(f"K={K}: best tau {t[np.nanargmax(v)]:.2f}, power {np.nanmax(v):.4f}; "
          + " ".join(f"{x:.3f}" for x in v))
