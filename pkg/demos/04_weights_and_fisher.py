"""
Sample-size weights and Fisher's combination
============================================

Unequal cohorts can be weighted by sqrt(n_k / sum n_j) over the survivors.
Fisher's -2 sum log p is the classical alternative; its critical value has no
normal-scale meaning, so we report it on its own scale.
"""

# %%
from basketpool import DesignSpec, WeightScheme, calibrate, combine, overall_power

p = [0.01, 0.35, 0.12, 0.04]
n = [12, 30, 20, 40]
print(combine(p, 0.2))
print(combine(p, 0.2, WeightScheme.sample_size(n)))
print(combine(p, 0.2, method="fisher"))

# %%
for scheme in (WeightScheme(), WeightScheme.sample_size(n)):
    d = DesignSpec(4, 0.2, weights=scheme)
    r = calibrate(d)
    print(f"{scheme.descriptor:<16} alpha* {r.alpha_star:.5f}  "
          f"power {overall_power(d, 2.0, calibration=r).overall:.4f}")

# %%
fisher = DesignSpec(3, 0.2, method="fisher")
r = calibrate(fisher)
print(f"Fisher critical value {r.critical_value:.3f} "
      f"(product of survivors below {r.alpha_star:.5f})")
print(f"power: Fisher {overall_power(fisher, 2.0).overall:.4f}, "
      f"inverse normal {overall_power(DesignSpec(3, 0.2), 2.0).overall:.4f}")
