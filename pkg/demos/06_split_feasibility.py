# Split feasibility through a linear map: find x in C with A x in Q.
#
# The constraint in the range space is pulled back through A by the Landweber
# transform x -> x + A*(P_Q(Ax) - Ax)/||A||^2, which inherits the
# demicontraction constant of P_Q.  Composing its relaxation with a relaxed
# P_C and stepping by the reciprocal of the composed constant gives a
# monotone iteration that lands in the feasible set.

import numpy as np

from fixops.hilbert import LinearMap, estimate_norm
from fixops.operators import Box, landweber, projection
from fixops.solver import StoppingRule, iterate, preset_moudafi

A = LinearMap(np.diag([1.0, 2.0]))
estimate_norm(A)
print(f"linear map diag(1, 2), estimated norm {A.cached_norm:g}")

C = Box([0.0, 0.0], [1.0, 1.0])
Q = Box([0.5, 0.5], [1.5, 1.5])
# feasible set: x in [0.5, 1] x [0.25, 0.75]

S = projection(Q)
U = projection(C)
T = landweber(S, A)
print(f"Landweber transform certificate: {T.certificate}")

V, rule = preset_moudafi(S, U, A, lam := 1.0, mu := 1.0)
print(f"composed step: constant relaxation {rule.sigma_at(np.zeros(2)):g} "
      f"(reciprocal of the composed cutter constant)")

for x0 in ([5.0, -3.0], [-2.0, 4.0], [0.9, 0.9]):
    trace = iterate(V, rule, StoppingRule(residual_tol=1e-10, max_iters=500), x0)
    x = trace.final_x
    ax = A(x)
    print(f"\nstart {x0}: {trace.status.value} after {trace.iterations} iterations")
    print(f"  limit x  = {np.round(x, 10).tolist()}   in C: "
          f"{bool(np.all((x >= -1e-9) & (x <= 1 + 1e-9)))}")
    print(f"  limit Ax = {np.round(ax, 10).tolist()}   in Q: "
          f"{bool(np.all((ax >= 0.5 - 1e-9) & (ax <= 1.5 + 1e-9)))}")
