"""Point-dependent step sizes for extrapolated compositions.

For a ``lam``-relaxation ``T`` and a ``mu``-relaxation ``U`` with
``lam * mu < 4``, the composition ``U o T`` admits a step constant that
depends on the current point and is never larger than the worst-case constant
``nu_star(lam, mu)``.  Relaxing by the reciprocal of that constant therefore
takes steps at least as long as the fixed ``1/nu_star`` relaxation, without
losing the monotonicity that drives convergence.

Displacement notation used throughout, for points ``x`` and ``y``:
``a1 = T(x) - x``, ``b1 = UT(x) - T(x)``, ``a2 = T(y) - y``,
``b2 = UT(y) - T(y)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import parameter_algebra as pa
from .hilbert import as_point
from .operators import Hyperplane, Operator, PrimitiveSet, projection, relax

__all__ = [
    "ExtrapolationState",
    "DenominatorRatio",
    "lemma_a_plus_b",
    "tau_star_pair",
    "tau_star_common",
    "tau_hat_ball_affine",
]

# Relative floor under which a denominator counts as cancelled to zero and the
# safe non-extrapolated step 1 is returned.
_DENOM_FLOOR = 1e-14
# "x is a fixed point" tolerance, relative to 1 + ||x||.
_FIX_ATOL = 1e-14


def _check_product(lam: float, mu: float) -> None:
    if not (np.isfinite(lam) and lam > 0 and np.isfinite(mu) and mu > 0):
        raise ValueError("lam and mu must be positive finite reals")
    if not lam * mu < 4.0:
        raise ValueError(f"lam*mu must be < 4, got {lam * mu!r}")


@dataclass(frozen=True)
class ExtrapolationState:
    """Displacements of a composition at two points, with the relaxation pair."""

    a1: np.ndarray
    b1: np.ndarray
    a2: np.ndarray
    b2: np.ndarray
    lam: float
    mu: float

    def __post_init__(self):
        _check_product(self.lam, self.mu)

    @staticmethod
    def from_points(T: Operator, U: Operator, lam: float, mu: float, x, y):
        x = as_point(x)
        y = as_point(y)
        tx, ty = T(x), T(y)
        return ExtrapolationState(
            a1=tx - x, b1=U(tx) - tx, a2=ty - y, b2=U(ty) - ty, lam=float(lam), mu=float(mu)
        )


class DenominatorRatio(NamedTuple):
    denominator: float
    ratio: float
    degenerate: bool  # a + b = 0: the quotient collapses to 0


def lemma_a_plus_b(lam: float, mu: float, a, b) -> DenominatorRatio:
    """Positivity guard and bounded quotient for the extrapolation step.

    For ``lam*mu < 4`` and ``(a, b)`` not both zero, the denominator
    ``(1/lam)||a||^2 + (1/mu)||b||^2 + <a, b>`` is strictly positive and the
    quotient ``||a + b||^2 / denominator`` lies in ``(0, nu_star]``; it equals
    0 exactly when ``a + b = 0``, which is reported via ``degenerate``.
    """
    _check_product(lam, mu)
    a = as_point(a)
    b = as_point(b)
    na2 = float(a @ a)
    nb2 = float(b @ b)
    if na2 + nb2 == 0.0:
        raise ValueError("a and b must not both be zero")
    denom = na2 / lam + nb2 / mu + float(a @ b)
    s = a + b
    num = float(s @ s)
    return DenominatorRatio(denom, num / denom, degenerate=num == 0.0)


def tau_star_pair(state: ExtrapolationState) -> float:
    """Sharp point-pair step constant from the displacement differences.

    Evaluates ``||(a1-a2)+(b1-b2)||^2`` over the positive quadratic form of the
    differences; returns 1 when both differences vanish (both points already
    behave like fixed points of the composition relative to each other) or
    when cancellation wipes out the denominator.
    """
    da = state.a1 - state.a2
    db = state.b1 - state.b2
    na2 = float(da @ da)
    nb2 = float(db @ db)
    if na2 + nb2 == 0.0:
        return 1.0
    denom = na2 / state.lam + nb2 / state.mu + float(da @ db)
    if denom < _DENOM_FLOOR * (na2 + nb2):
        return 1.0
    s = da + db
    return float(s @ s) / denom


def tau_star_common(T: Operator, U: Operator, lam: float, mu: float, x) -> float:
    """Per-point step constant when ``T`` and ``U`` share a fixed point.

    With a common fixed point the pairwise constant is computable from the
    current point alone: ``||a1+b1||^2 / ((1/lam)||a1||^2 + (1/mu)||b1||^2 +
    <a1, b1>)``, and it always lies in ``(0, nu_star]``.  Returns 1 at (numerical)
    fixed points; the result is clamped to ``nu_star`` so the bound is exact.
    """
    _check_product(lam, mu)
    x = as_point(x)
    tx = T(x)
    a1 = tx - x
    b1 = U(tx) - tx
    na2 = float(a1 @ a1)
    nb2 = float(b1 @ b1)
    atol = _FIX_ATOL * (1.0 + float(np.linalg.norm(x)))
    if na2 + nb2 <= atol * atol:
        return 1.0
    denom = na2 / lam + nb2 / mu + float(a1 @ b1)
    if denom < _DENOM_FLOOR * (na2 + nb2):
        return 1.0
    s = a1 + b1
    nu = pa.nu_star_value(lam, mu)
    return min(float(s @ s) / denom, nu)


def tau_hat_ball_affine(A: PrimitiveSet, B: Hyperplane, lam: float, x) -> float:
    """Closed-form extrapolation constant for ``P_B o (P_A)_lam`` on points of ``B``.

    Specialization with ``mu = 1`` and an affine second set: for ``x`` in
    ``B``, the constant

        ``||a1+b1||^2 / ((1/lam)||a1||^2 + ||b1||^2 + <a1,b1> - (1/lam)||b1||^2)``

    dominates the (unknown-fixed-point) sharp constant, and its minimum with
    ``nu_star(lam, 1)`` keeps the extrapolation bound.  Typical use has ``A``
    a ball; any primitive works.  Iterates of the extrapolated method stay in
    ``B``, so the domain restriction is preserved along a run started in ``B``.
    """
    if not isinstance(B, Hyperplane):
        raise ValueError("the second set must be affine (a hyperplane)")
    if not 1.0 <= lam < 4.0:
        raise ValueError(f"lam must lie in [1, 4), got {lam!r}")
    x = as_point(x, dim=B.dim)
    if not B.contains(x, tol=1e-9):
        raise ValueError("x must lie in the affine set B")
    T = relax(projection(A), lam) if lam != 1.0 else projection(A)
    tx = T(x)
    b_proj = B.project(tx)
    a1 = tx - x
    b1 = b_proj - tx
    utx_minus_x = a1 + b1
    nu = pa.nu_star_value(lam, 1.0)
    atol = _FIX_ATOL * (1.0 + float(np.linalg.norm(x)))
    if float(np.linalg.norm(utx_minus_x)) <= atol:
        return 1.0
    na2 = float(a1 @ a1)
    nb2 = float(b1 @ b1)
    denom = na2 / lam + nb2 + float(a1 @ b1) - nb2 / lam
    if denom < _DENOM_FLOOR * (na2 + nb2):
        return 1.0
    tau_bar = float(utx_minus_x @ utx_minus_x) / denom
    return min(tau_bar, nu)
