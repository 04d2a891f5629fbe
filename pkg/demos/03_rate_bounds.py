"""
Spectral constants and contraction factors
==========================================

Each method has a bound of the form E||x^k - x_dag||^2 <= q^k ||x^0 - x_dag||^2.
Smaller q is a better guarantee. For standardized matrices that satisfy the
rank condition the alternated inertial factor never exceeds the two-subspace
factor.
"""
import numpy as np

from inertial_kaczmarz import GenSpec, StopRule, compute_profile, generate, rate_bounds, run
from inertial_kaczmarz.spectral import improvement_condition, improvement_threshold

p = generate(GenSpec(50, 20, 0.9, 42))
prof = compute_profile(p.A)
for k, v in prof.as_dict().items():
    print(f"{k:12s} {v}")

rates = rate_bounds(prof)
for k, v in rates.as_dict().items():
    print(f"{k:12s} {v:.10f}")

# how many rows may an instance of rank r have for the comparison to hold?
for r in (2, 3, 5, 10):
    print(f"rank {r:2d}: rows up to {improvement_threshold(r):.1f}")
print("condition holds here:", improvement_condition(prof.rank, prof.rows))

# the bounds are loose: compare with the mean error over 500 short runs
stop = StopRule(rse_tol=1e-300, max_iters=20, reference=p.x_dag)
mean = np.mean([run("mirk", p.A, p.b, stop=stop, seed=s).rse for s in range(500)], axis=0)
bound = np.r_[1.0, rates.mirk_factor ** np.arange(20) * rates.rk_factor]
for k in (1, 5, 10, 20):
    print(f"k={k:2d}  mean rse={mean[k]:.4f}  bound={bound[k]:.4f}")
