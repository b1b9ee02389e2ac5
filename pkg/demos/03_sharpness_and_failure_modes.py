# Why the composition constant cannot be improved, and what breaks outside
# the certified region.
#
# Three constructions, all on relaxed hyperplane projections in the plane:
#   1. a rotating-hyperplane family witnessing that any constant below
#      nu(lam, mu) fails for some pair of factors;
#   2. a same-hyperplane composition that is not a relaxed cutter at all once
#      lam*mu > lam + mu;
#   3. a relaxation pair whose composition is the identity, so its fixed set
#      is strictly larger than the common fixed points.

import numpy as np

from fixops.parameter_algebra import nu_star
from fixops.verify import (
    fix_collapse_witness,
    fixv_characterization,
    not_relaxed_cutter_witness,
    optimality_h,
    sharpness_witness,
)
from fixops.operators import Hyperplane

lam, mu = 3.0, 1.0
nu = nu_star(lam, mu).nu_star
print(f"sharp constant for lam = {lam:g}, mu = {mu:g}: nu = {nu:g}")

# h(rho) is the limiting slack of the family at the worst offset: it vanishes
# exactly at nu and is negative below, so any smaller constant eventually fails.
print("\nlimiting slack h(rho) just below nu:")
for rho in (4.0, 3.99, 3.9, 3.5, 3.0):
    print(f"  h({rho:4.2f}) = {optimality_h(lam, mu, rho):+.5f}")

rho = 3.9
w = sharpness_witness(lam, mu, rho)
print(f"\nfinite witness for rho = {rho:g}: hyperplane index k = {w.k}, "
      f"slack {w.slack:+.4f} at x = ({w.x[0]:g}, {w.x[1]:.4f})")
print(f"  (limiting value {w.limit_value:+.4f} as the family rotates flat)")

# Outside the certified region the composition need not be a relaxed cutter
# for any constant: the inner product against fixed-point directions flips sign.
report = not_relaxed_cutter_witness(3.0, 1.6, n=500, seed=0)
print(f"\nlam*mu = 4.8 > 4.6 = lam + mu: <z - x, UT(x) - x> = "
      f"{report.coefficient:+.2f} * dist(x, H)^2 < 0 for x off H "
      f"(max sampled inner product {report.max_inner:+.3e})")

# And fixed points can appear out of nowhere: the composition below is the
# identity although both factors fix only the hyperplane.
collapse = fix_collapse_witness(3.0, 1.5)
print(f"\ncollapse pair: (P_H)_{3.0:g} composed into (P_H)_{collapse.outer_relaxation:g}"
      f" gives the identity (max deviation {collapse.max_deviation:.2e});"
      " its fixed set is the whole plane, not H")

# Fixed-point existence for relaxed projection pairs on parallel hyperplanes:
# on the critical surface lam + mu = lam*mu existence is equivalent to the
# sets meeting; off it a fixed point exists even for disjoint sets.
A = Hyperplane([0.0, 1.0], 0.0)
B = Hyperplane([0.0, 1.0], 1.0)
report = fixv_characterization(A, B, 2.0, 2.0, x0=[0.3, 0.7], max_iters=100)
print(f"\nlam = mu = 2 on parallel hyperplanes a unit apart: "
      f"fixed point found = {report.fixed_point_found} "
      f"(residual stays at {report.trace.final_residual:g})")
report = fixv_characterization(A, B, 3.0, 1.0)
print(f"lam = 3, mu = 1 on the same sets: closed-form fixed point "
      f"{np.round(report.fixed_point, 12).tolist()} with residual "
      f"{report.residual_at_point:.1e}")
