"""Numerical class certification and sharpness counterexamples.

``check_class`` samples the defining inequality of an operator class and
reports the worst slack found; a certificate "passes sampling" when no sample
violates the inequality beyond tolerance.  Sampling refutes false claims in
practice but proves nothing — the point is that every certificate the algebra
attaches can be hammered with random points, and every impossibility claim
can be exhibited by an explicit witness.

The witness constructors build the constructions showing that the composition
constant ``nu_star`` is sharp: a rotating-hyperplane family on which any
smaller constant fails, the same-hyperplane composition that is not a relaxed
cutter at all when ``lam*mu > lam + mu``, and the relaxation pair whose
composition collapses to the identity while the factors fix only a hyperplane.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np

from . import parameter_algebra as pa
from .errors import FixopsError
from .hilbert import as_point
from .operators import (
    ClassCertificate,
    Hyperplane,
    Operator,
    compose,
    projection,
    relax,
)
from .solver import IterationTrace, Status, StepRule, StoppingRule, iterate

__all__ = [
    "Claim",
    "CheckReport",
    "check_class",
    "default_sampler",
    "witness_slack",
    "composition_identity_slack",
    "optimality_h",
    "SharpnessWitness",
    "SharpnessScanError",
    "sharpness_witness",
    "not_relaxed_cutter_witness",
    "fix_collapse_witness",
    "fixv_characterization",
    "FixVReport",
]

_POINT_PAIR_PROPS = {"NE", "FNE", "RFNE", "SPC"}
_FIX_POINT_PROPS = {"QNE", "SQNE", "Cutter", "RelaxedCutter", "Demicontraction",
                    "GeneralizedRelaxedCutter"}


@dataclass(frozen=True)
class Claim:
    """A checkable class membership claim.

    ``kind`` is one of NE, FNE, RFNE, SPC, Cutter, RelaxedCutter,
    Demicontraction, QNE, SQNE, GeneralizedRelaxedCutter.  RFNE/RelaxedCutter
    and SPC/Demicontraction/SQNE carry a numeric parameter; the generalized
    relaxed cutter carries a point-dependent factor ``tau``.
    """

    kind: str
    parameter: Optional[float] = None
    tau: Optional[Callable[[np.ndarray], float]] = None

    def __post_init__(self):
        if self.kind not in _POINT_PAIR_PROPS | _FIX_POINT_PROPS:
            raise ValueError(f"unknown property {self.kind!r}")
        if self.kind in {"RFNE", "SPC", "RelaxedCutter", "Demicontraction", "SQNE"}:
            if self.parameter is None:
                raise ValueError(f"{self.kind} claim requires a parameter")
        if self.kind == "GeneralizedRelaxedCutter" and self.tau is None:
            raise ValueError("GeneralizedRelaxedCutter claim requires tau")

    @property
    def needs_fix_points(self) -> bool:
        return self.kind in _FIX_POINT_PROPS

    @staticmethod
    def from_certificate(cert: ClassCertificate) -> "Claim":
        return Claim(cert.tag.value, cert.parameter)

    def describe(self) -> str:
        if self.kind == "GeneralizedRelaxedCutter":
            return "GeneralizedRelaxedCutter(tau)"
        if self.parameter is None:
            return self.kind
        return f"{self.kind}({self.parameter:g})"


def _as_claim(claim) -> Claim:
    if isinstance(claim, Claim):
        return claim
    if isinstance(claim, ClassCertificate):
        return Claim.from_certificate(claim)
    raise TypeError("claim must be a Claim or a ClassCertificate")


def default_sampler(dim: int, centers: Optional[Sequence] = None,
                    scales: Sequence[float] = (0.1, 1.0, 10.0)):
    """Standard-normal sampler at several radii around the given centers.

    Violations of the sharp constructions show up both near and far from the
    fixed sets, hence the spread of scales.
    """
    if centers is None or len(centers) == 0:
        C = np.zeros((1, dim))
    else:
        C = np.atleast_2d(np.asarray(centers, dtype=float))
    scales = np.asarray(scales, dtype=float)

    def sample(rng, n: int) -> np.ndarray:
        idx = rng.integers(0, len(C), size=n)
        radii = scales[rng.integers(0, len(scales), size=n)]
        return C[idx] + radii[:, None] * rng.standard_normal((n, dim))

    return sample


def _operator_centers(T: Operator):
    if T.fix is None:
        return None
    return T.fix.feature_points()


def _row_dot(A, B):
    return np.einsum("ij,ij->i", A, B)


def _pair_slacks(T: Operator, claim: Claim, X, Y):
    TX, TY = T(X), T(Y)
    if claim.kind == "NE":
        return _row_dot(X - Y, X - Y) - _row_dot(TX - TY, TX - TY)
    if claim.kind == "FNE":
        return _row_dot(TX - TY, X - Y) - _row_dot(TX - TY, TX - TY)
    D = (TX - X) - (TY - Y)
    if claim.kind == "RFNE":
        return _row_dot(Y - X, D) - _row_dot(D, D) / claim.parameter
    if claim.kind == "SPC":
        return (_row_dot(X - Y, X - Y) + claim.parameter * _row_dot(D, D)
                - _row_dot(TX - TY, TX - TY))
    raise ValueError(f"not a point-pair property: {claim.kind}")


def _fix_slacks(T: Operator, claim: Claim, X, z):
    TX = T(X)
    R = TX - X
    if claim.kind == "QNE":
        return _row_dot(X - z, X - z) - _row_dot(TX - z, TX - z)
    if claim.kind == "SQNE":
        return (_row_dot(X - z, X - z) - claim.parameter * _row_dot(R, R)
                - _row_dot(TX - z, TX - z))
    if claim.kind == "Cutter":
        return _row_dot(z - X, R) - _row_dot(R, R)
    if claim.kind == "RelaxedCutter":
        return claim.parameter * _row_dot(z - X, R) - _row_dot(R, R)
    if claim.kind == "Demicontraction":
        return (_row_dot(X - z, X - z) + claim.parameter * _row_dot(R, R)
                - _row_dot(TX - z, TX - z))
    if claim.kind == "GeneralizedRelaxedCutter":
        taus = np.array([float(claim.tau(x)) for x in X])
        return taus * _row_dot(z - X, R) - _row_dot(R, R)
    raise ValueError(f"not a fixed-point property: {claim.kind}")


@dataclass
class CheckReport:
    """Result of sampling one class inequality."""

    property_name: str
    parameter: Optional[float]
    samples: int
    worst_slack: float
    witnesses: list[dict] = field(default_factory=list)
    verdict: str = "PassedSampling"
    tol: float = 1e-9

    @property
    def passed(self) -> bool:
        return self.verdict == "PassedSampling"

    def to_dict(self) -> dict:
        return {
            "property": self.property_name,
            "parameter": self.parameter,
            "samples": self.samples,
            "worst_slack": self.worst_slack,
            "witnesses": self.witnesses,
            "verdict": self.verdict,
            "tol": self.tol,
        }


def check_class(T: Operator, claim, sampler=None, fix_points=None,
                n: int = 10000, seed: int = 0, tol: float = 1e-9,
                max_witnesses: int = 5) -> CheckReport:
    """Sample the defining inequality of ``claim`` for ``T`` on ``n`` points.

    Point-pair properties (NE/FNE/RFNE/SPC) draw independent pairs from the
    sampler; fixed-point properties additionally require explicit
    ``fix_points``.  The report carries the worst slack (negative = worst
    violation), up to ``max_witnesses`` of the worst sample points, and the
    verdict ``ViolationFound`` exactly when the worst slack is below ``-tol``.
    Fixed seed implies an identical report.
    """
    claim = _as_claim(claim)
    rng = np.random.default_rng(seed)
    dim = T.dim
    if dim is None and fix_points is not None:
        dim = np.atleast_2d(np.asarray(fix_points, dtype=float)).shape[1]
    if dim is None:
        raise ValueError("operator has no dimension; provide fix_points or a dimensioned operator")
    if sampler is None:
        sampler = default_sampler(dim, centers=_operator_centers(T))

    X = np.asarray(sampler(rng, n), dtype=float)
    if claim.needs_fix_points:
        if fix_points is None or len(np.atleast_2d(fix_points)) == 0:
            raise ValueError(f"{claim.kind} claim requires nonempty fix_points")
        Z = np.atleast_2d(np.asarray(fix_points, dtype=float))
        slack = np.full(n, np.inf)
        which_z = np.zeros(n, dtype=int)
        for j, z in enumerate(Z):
            s = _fix_slacks(T, claim, X, z)
            better = s < slack
            slack[better] = s[better]
            which_z[better] = j
        order = np.argsort(slack, kind="stable")[:max_witnesses]
        witnesses = [
            {"x": X[i].tolist(), "z": Z[which_z[i]].tolist(), "slack": float(slack[i])}
            for i in order
        ]
    else:
        Y = np.asarray(sampler(rng, n), dtype=float)
        slack = _pair_slacks(T, claim, X, Y)
        order = np.argsort(slack, kind="stable")[:max_witnesses]
        witnesses = [
            {"x": X[i].tolist(), "y": Y[i].tolist(), "slack": float(slack[i])}
            for i in order
        ]

    worst = float(np.min(slack))
    verdict = "ViolationFound" if worst < -tol else "PassedSampling"
    return CheckReport(claim.describe(), claim.parameter, n, worst, witnesses, verdict, tol)


def witness_slack(T: Operator, claim, witness: dict) -> float:
    """Re-evaluate the inequality slack at a recorded witness."""
    claim = _as_claim(claim)
    x = np.asarray(witness["x"], dtype=float)[None, :]
    if claim.needs_fix_points:
        z = np.asarray(witness["z"], dtype=float)
        return float(_fix_slacks(T, claim, x, z)[0])
    y = np.asarray(witness["y"], dtype=float)[None, :]
    return float(_pair_slacks(T, claim, x, y)[0])


def composition_identity_slack(T: Operator, U: Operator, lam: float, mu: float,
                               x, y, nu: float) -> float:
    """Left minus right side of the two-point composition inequality.

    For a ``lam``-relaxation ``T`` and ``mu``-relaxation ``U`` the difference
    is nonnegative for every ``nu != 0``; this is the identity from which all
    composition certificates descend.
    """
    if nu == 0:
        raise ValueError("nu must be nonzero")
    x = as_point(x)
    y = as_point(y)
    tx, ty = T(x), T(y)
    utx, uty = U(tx), U(ty)
    a1, a2 = tx - x, ty - y
    b1, b2 = utx - tx, uty - ty
    dU = (utx - x) - (uty - y)
    lhs = float((y - x) @ dU) - float(dU @ dU) / nu
    da, db = a1 - a2, b1 - b2
    rhs = ((1.0 / lam - 1.0 / nu) * float(da @ da)
           + (1.0 / mu - 1.0 / nu) * float(db @ db)
           + (1.0 - 2.0 / nu) * float(da @ db))
    return lhs - rhs


# --------------------------------------------------------------------------
# sharpness of the composition constant


def optimality_h(lam: float, mu: float, rho: float) -> float:
    """Minimum of the limiting slack of the rotating-hyperplane family.

    Defined on ``rho`` in ``(lam + mu - lam*mu, nu_star]``; the value is zero
    exactly at ``rho = nu_star`` and strictly negative just below it, which is
    what makes the constant optimal.
    """
    verdict = pa.nu_star(lam, mu)
    if not verdict.certified:
        raise ValueError("requires lam*mu < 4")
    s = lam + mu - lam * mu
    if not (s < rho <= verdict.nu_star):
        raise ValueError(
            f"rho must lie in ({s!r}, {verdict.nu_star!r}], got {rho!r}"
        )
    return (-(mu**2) / (4.0 * s) * (rho * (2.0 - lam) - 2.0 * s) ** 2 / (rho - s)
            + mu * rho - mu**2)


class SharpnessWitness(NamedTuple):
    k: int
    x: np.ndarray
    slack: float
    xi_star: float
    limit_value: float


class SharpnessScanError(FixopsError):
    """No finite witness found within the scan bound."""

    def __init__(self, k_max, limit_value):
        self.k_max = k_max
        self.limit_value = limit_value
        super().__init__(
            f"no k <= {k_max} produced a negative slack; rho appears too far below the "
            f"sharp constant (limiting slack h(rho) = {limit_value!r})"
        )


def sharpness_witness(lam: float, mu: float, rho: float,
                      k_max: int = 2**20) -> SharpnessWitness:
    """Finite witness that the composition is not a ``rho``-relaxed cutter.

    Builds the planar family ``T = (P_H)_lam`` with ``H = {x2 = 0}`` and
    ``U_k = (P_{H_k})_mu`` with ``H_k = {x1 - k*x2 = k}`` (whose composition
    fixes only ``(k, 0)``), evaluates the relaxed-cutter slack at the
    worst-case point ``x = (0, xi*)``, and scans ``k`` in powers of 2 until
    the slack goes negative.
    """
    verdict = pa.nu_star(lam, mu)
    if not verdict.certified:
        raise ValueError("requires lam*mu < 4")
    s = lam + mu - lam * mu
    if not (s < rho < verdict.nu_star):
        raise ValueError(
            f"rho must lie strictly inside ({s!r}, {verdict.nu_star!r}), got {rho!r}"
        )
    limit = optimality_h(lam, mu, rho)
    xi = -((rho * (2.0 - lam) - 2.0 * s) * mu) / (2.0 * s * (rho - s))
    x = np.array([0.0, xi])
    T = relax(projection(Hyperplane([0.0, 1.0], 0.0)), lam)
    k = 1
    while k <= k_max:
        Uk = relax(projection(Hyperplane([1.0, -float(k)], float(k))), mu)
        zk = np.array([float(k), 0.0])
        utx = Uk(T(x))
        slack = rho * float((zk - x) @ (utx - x)) - float((utx - x) @ (utx - x))
        if slack < 0.0:
            return SharpnessWitness(k, x, slack, xi, limit)
        k *= 2
    raise SharpnessScanError(k_max, limit)


@dataclass
class NotRelaxedCutterReport:
    """Same-hyperplane composition with negative cutter inner product."""

    T: Operator
    U: Operator
    coefficient: float  # lam + mu - lam*mu, negative here
    max_inner: float    # max over samples of <z - x, UT(x) - x>, must be < 0
    witnesses: list[dict]

    def to_dict(self):
        return {
            "coefficient": self.coefficient,
            "max_inner": self.max_inner,
            "witnesses": self.witnesses,
        }


def not_relaxed_cutter_witness(lam: float, mu: float, dim: int = 2,
                               n: int = 100, seed: int = 0) -> NotRelaxedCutterReport:
    """Witness that the same-hyperplane composition is not a relaxed cutter.

    Requires ``lam*mu > lam + mu``.  Both factors relax the projection onto
    one hyperplane ``H``; for every ``x`` off ``H`` the inner product
    ``<z - x, UT(x) - x>`` equals ``(lam + mu - lam*mu) * dist(x, H)^2 < 0``,
    so no positive relaxation constant can hold.
    """
    if not lam * mu > lam + mu:
        raise ValueError("requires lam*mu > lam + mu")
    normal = np.zeros(dim)
    normal[-1] = 1.0
    H = Hyperplane(normal, 0.0)
    T = relax(projection(H), lam)
    U = relax(projection(H), mu)
    UT = compose(U, T)
    rng = np.random.default_rng(seed)
    X = default_sampler(dim)(rng, n)
    # keep samples off H
    X = X[np.abs(X[:, -1]) > 1e-8]
    Z = H.project(X)  # nearest hyperplane points serve as z
    inner = _row_dot(Z - X, UT(X) - X)
    order = np.argsort(inner)[::-1][:5]
    witnesses = [{"x": X[i].tolist(), "z": Z[i].tolist(), "inner": float(inner[i])}
                 for i in order]
    return NotRelaxedCutterReport(T, U, lam + mu - lam * mu, float(np.max(inner)), witnesses)


@dataclass
class FixCollapseReport:
    """Relaxation pair whose composition is the identity on all of R^n."""

    T: Operator
    U: Operator
    sigma: float
    outer_relaxation: float  # sigma * mu
    coefficient: float       # lam + sigma*mu - lam*sigma*mu, zero by construction
    max_deviation: float     # max ||UT(x) - x|| over samples
    hyperplane: Hyperplane

    def to_dict(self):
        return {
            "sigma": self.sigma,
            "outer_relaxation": self.outer_relaxation,
            "coefficient": self.coefficient,
            "max_deviation": self.max_deviation,
        }


def fix_collapse_witness(lam: float, mu: float, dim: int = 2, n: int = 200,
                         seed: int = 0) -> FixCollapseReport:
    """Witness that fixed points of a composition can exceed the common ones.

    Requires ``lam + mu <= lam*mu`` (hence ``lam > 1``).  With
    ``sigma = lam/(mu*(lam - 1))``, the pair ``T = (P_H)_lam`` and
    ``U = (P_H)_{sigma*mu}`` composes to the identity, whose fixed set is all
    of R^n, while the factors only share ``H``.
    """
    if not lam + mu <= lam * mu:
        raise ValueError("requires lam + mu <= lam*mu")
    if not lam > 1.0:
        raise ValueError("requires lam > 1")
    sigma = lam / (mu * (lam - 1.0))
    normal = np.zeros(dim)
    normal[-1] = 1.0
    H = Hyperplane(normal, 0.0)
    T = relax(projection(H), lam)
    U = relax(projection(H), sigma * mu)
    UT = compose(U, T)
    rng = np.random.default_rng(seed)
    X = default_sampler(dim)(rng, n)
    dev = np.linalg.norm(UT(X) - X, axis=1)
    scale = 1.0 + np.linalg.norm(X, axis=1)
    max_rel = float(np.max(dev / scale))
    if max_rel > 1e-12:
        raise FixopsError(
            f"composition failed to collapse to the identity (max relative deviation {max_rel})"
        )
    return FixCollapseReport(
        T, U, sigma, sigma * mu, lam + sigma * mu - lam * sigma * mu,
        float(np.max(dev)), H,
    )


# --------------------------------------------------------------------------
# fixed points of relaxed projection compositions


@dataclass
class FixVReport:
    """Existence and location of fixed points of ``(P_B)_mu (P_A)_lam``."""

    branch: str  # "sum_equals_product" | "sum_differs"
    lam: float
    mu: float
    fixed_point_found: Optional[bool] = None
    sets_intersect: Optional[bool] = None
    consistent: Optional[bool] = None
    shadow_point: Optional[np.ndarray] = None
    shadow_in_intersection: Optional[bool] = None
    fixed_point: Optional[np.ndarray] = None
    residual_at_point: Optional[float] = None
    trace: Optional[IterationTrace] = None

    def to_dict(self):
        return {
            "branch": self.branch,
            "lam": self.lam,
            "mu": self.mu,
            "fixed_point_found": self.fixed_point_found,
            "sets_intersect": self.sets_intersect,
            "consistent": self.consistent,
            "shadow_point": None if self.shadow_point is None else self.shadow_point.tolist(),
            "shadow_in_intersection": self.shadow_in_intersection,
            "fixed_point": None if self.fixed_point is None else self.fixed_point.tolist(),
            "residual_at_point": self.residual_at_point,
            "final_residual": None if self.trace is None else self.trace.final_residual,
            "status": None if self.trace is None else self.trace.status.value,
        }


def _hyperplanes_intersect(A: Hyperplane, B: Hyperplane) -> bool:
    na, nb = np.linalg.norm(A.normal), np.linalg.norm(B.normal)
    cosine = float(A.normal @ B.normal) / (na * nb)
    if abs(abs(cosine) - 1.0) > 1e-12:
        return True  # transversal hyperplanes always meet
    # parallel: they meet only if they coincide
    t = cosine * nb / na
    return bool(abs(B.offset - t * A.offset) <= 1e-12 * (1.0 + abs(A.offset) + abs(B.offset)))


def fixv_characterization(A: Hyperplane, B: Hyperplane, lam: float, mu: float,
                          x0=None, max_iters: int = 500, residual_tol: float = 1e-10,
                          seed: int = 0) -> FixVReport:
    """Characterize fixed points of ``V = (P_B)_mu (P_A)_lam`` for hyperplanes.

    When ``lam + mu == lam*mu``, fixed points exist exactly when the sets
    meet; this branch runs the halved iteration, reports whether the residual
    vanishes, cross-checks against the sets' intersection computed directly,
    and (when a fixed point is found) verifies that its projection onto ``A``
    lies in both sets.  When ``lam + mu != lam*mu`` and the hyperplanes are
    parallel and disjoint, the closed-form fixed point
    ``x = (lam*a + mu*b - lam*mu*a)/(lam + mu - lam*mu)`` with ``a`` in ``A``
    and ``b = P_B(a)`` is constructed and verified.
    """
    if not isinstance(A, Hyperplane) or not isinstance(B, Hyperplane):
        raise ValueError("fixed-point characterization supports hyperplane pairs only")
    if not (lam > 0 and mu > 0):
        raise ValueError("lam and mu must be positive")
    V = compose(relax(projection(B), mu), relax(projection(A), lam))

    if lam + mu == lam * mu:
        # existence branch: run the midpoint relaxation and watch the residual
        W = relax(V, 0.5)
        rng = np.random.default_rng(seed)
        if x0 is None:
            x0 = A.feature_points()[0] + rng.standard_normal(A.dim)
        trace = iterate(W, StepRule(1.0),
                        StoppingRule(residual_tol=residual_tol, max_iters=max_iters), x0)
        found = trace.status is Status.CONVERGED
        meets = _hyperplanes_intersect(A, B)
        report = FixVReport("sum_equals_product", lam, mu,
                            fixed_point_found=found, sets_intersect=meets,
                            consistent=found == meets, trace=trace)
        if found:
            shadow = A.project(trace.final_x)
            report.shadow_point = shadow
            report.shadow_in_intersection = bool(
                A.contains(shadow, tol=1e-8) and B.contains(shadow, tol=1e-8)
            )
        return report

    if _hyperplanes_intersect(A, B):
        raise ValueError(
            "closed-form branch needs disjoint parallel hyperplanes "
            "(the sets given intersect)"
        )
    a = A.feature_points()[0]
    b = B.project(a)
    x = (lam * a + mu * b - lam * mu * a) / (lam + mu - lam * mu)
    residual = float(np.linalg.norm(V(x) - x))
    return FixVReport("sum_differs", lam, mu, fixed_point=x, residual_at_point=residual)
