# The closed-form parameter calculus: class conversions, the sharp
# composition constant nu(lam, mu), its SPC twin gamma(alpha, beta), and the
# m-fold chain constant.

import numpy as np

from fixops import parameter_algebra as pa

# The two parameterizations are a bijection: lam-RFNE <-> alpha-SPC.
print("relaxation <-> pseudocontraction dictionary:")
for lam in (0.5, 1.0, 2.0, 3.0, 4.0):
    alpha = pa.rfne_to_spc(lam)
    print(f"  lam = {lam:3g}  <->  alpha = {alpha:+.3f}   (back: {pa.spc_to_rfne(alpha):g})")

# Composing a lam- and a mu-relaxation is again a relaxation, with the sharp
# constant nu = 4(lam + mu - lam*mu)/(4 - lam*mu), valid on lam*mu < 4.
print("\ncomposition constants:")
for lam, mu in [(1.0, 1.0), (3.0, 1.0), (2.0, 0.5), (1.9, 1.9), (2.0, 2.0)]:
    verdict = pa.nu_star(lam, mu)
    if verdict.nu_star is None:
        print(f"  nu({lam:g}, {mu:g}) : none ({verdict.notes})")
    else:
        print(f"  nu({lam:g}, {mu:g}) = {verdict.nu_star:.6g}   certified={verdict.certified}"
              f"   fixed-set intersection ok={verdict.fix_intersection_ok}")

# The constant always dominates both factors and the min/max envelope.
rng = np.random.default_rng(0)
lam = rng.uniform(0.1, 3.9, size=5)
mu = 3.9 / lam * rng.uniform(0.2, 0.9, size=5)  # keep lam*mu < 4
nu = pa.nu_star_value(lam, mu)
print("\nenvelope check on a few random pairs (nu >= max, nu >= 4 min/(min+2) > min):")
for l, m, n in zip(lam, mu, nu):
    lo = min(l, m)
    print(f"  lam={l:5.2f} mu={m:5.2f}:  {lo:5.2f} < {4 * lo / (lo + 2):5.2f} <= {n:6.2f},"
          f" max = {max(l, m):5.2f} <= {n:6.2f}")

# In SPC form the same composition rule reads gamma = alpha*beta/(alpha+beta),
# under the strict condition alpha + beta < alpha*beta.
print("\nSPC-form composition:")
print(f"  gamma(-1, -1)   = {pa.gamma_star(-1.0, -1.0):+.4f}")
print(f"  gamma(-2, +0.5) = {pa.gamma_star(-2.0, 0.5):+.4f}")

# Chains of more than two factors use the reciprocal sum.
print("\nchain constants (at most one positive factor):")
for alphas in ([-1.0, -1.0], [-2.0, 0.4, -2.0], [-2.0, 0.5, -2.0]):
    result = pa.chain_gamma(alphas)
    if result.value is None:
        print(f"  chain{tuple(alphas)} : absent ({result.reason})")
    else:
        print(f"  chain{tuple(alphas)} = {result.value:+.4f}")

# The full nu(lam, mu) surface is exportable as CSV through the command line:
#   fixops params nu-grid --min 0.1 --max 3.9 --step 0.1 --out nu_grid.csv
grid = np.arange(0.5, 4.0, 0.5)
print("\nnu on a coarse grid (rows lam, cols mu; '-' where lam*mu = 4):")
header = "        " + "".join(f"{m:8.1f}" for m in grid)
print(header)
for l in grid:
    cells = []
    for m in grid:
        v = pa.nu_star_value(l, m)
        cells.append("       -" if np.isnan(v) else f"{v:8.2f}")
    print(f"  {l:4.1f}  " + "".join(cells))
