# Projections onto primitive sets, operator classes, and numerical checking.
#
# Metric projections are the basic building blocks: they are firmly
# nonexpansive (FNE), and relaxing them sweeps out the whole RFNE scale.
# The verify module hammers any claimed class membership with random points.

import numpy as np

from fixops import Ball, Box, Halfspace, Hyperplane, projection, relax
from fixops.verify import Claim, check_class

rng = np.random.default_rng(0)

sets = {
    "hyperplane": Hyperplane([1.0, -2.0], 0.5),
    "halfspace": Halfspace([1.0, 0.0], 1.0),
    "ball": Ball([0.0, 1.0], 1.5),
    "box": Box([-1.0, -1.0], [1.0, 1.0]),
}

print("projections are firmly nonexpansive (worst sampled slack, 10^4 pairs):")
for name, primitive in sets.items():
    report = check_class(projection(primitive), Claim("FNE"), n=10_000, seed=1)
    print(f"  P[{name:10s}]  {report.verdict:15s} worst slack {report.worst_slack:+.3e}")

print("\nprojections are cutters with respect to their set:")
for name, primitive in sets.items():
    fix = primitive.sample(rng, 4)
    report = check_class(projection(primitive), Claim("Cutter"), fix_points=fix, n=5_000)
    print(f"  P[{name:10s}]  {report.verdict:15s} worst slack {report.worst_slack:+.3e}")

# Relaxation rescales the class constant: (P)_lam is lam-RFNE, and the
# certificate tracks that automatically; a reflection is the lam = 2 case.
P = projection(sets["hyperplane"])
for lam in (0.5, 1.0, 2.0, 3.0):
    T = relax(P, lam)
    report = check_class(T, T.certificate, n=10_000, seed=2)
    print(f"\n(P)_{lam:g} carries {T.certificate} -> {report.verdict}, "
          f"worst slack {report.worst_slack:+.3e}")

# A false claim is refuted with explicit witnesses.
T = relax(P, 3.0)
report = check_class(T, Claim("NE"), n=10_000, seed=3)
print(f"\nclaiming the 3-relaxation is nonexpansive: {report.verdict}")
worst = report.witnesses[0]
print(f"  worst witness slack {worst['slack']:+.3e} at x = {np.round(worst['x'], 3)}")
