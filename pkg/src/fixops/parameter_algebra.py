"""Closed-form parameter calculus for relaxed operator classes.

Two equivalent parameterizations are used throughout:

* relaxation form: an operator is a ``lam``-relaxation of a firmly
  nonexpansive operator (``lam``-RFNE) or of a cutter (``lam``-relaxed
  cutter), with ``lam > 0``;
* contraction form: an ``alpha``-strict pseudocontraction (SPC) or
  ``alpha``-demicontraction, with ``alpha < 1``.

The bijection between the two is ``alpha = (lam - 2)/lam`` and
``lam = 2/(1 - alpha)``.  All functions here are pure; strict inequalities are
evaluated exactly on the given floats (certificates fail closed at the sharp
boundaries).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .errors import CompositionUncertifiedError


def _check_positive(value, name):
    if not (np.isfinite(value) and value > 0):
        raise ValueError(f"{name} must be a positive finite real, got {value!r}")


def _check_lt_one(value, name):
    if not (np.isfinite(value) and value < 1):
        raise ValueError(f"{name} must be a finite real < 1, got {value!r}")


def rfne_to_spc(lam: float) -> float:
    """Strict-pseudocontraction constant of a ``lam``-RFNE operator: ``(lam-2)/lam``."""
    _check_positive(lam, "lam")
    return (lam - 2.0) / lam


def spc_to_rfne(alpha: float) -> float:
    """Relaxation constant of an ``alpha``-SPC operator: ``2/(1-alpha)``."""
    _check_lt_one(alpha, "alpha")
    return 2.0 / (1.0 - alpha)


def demicontraction_to_relaxed_cutter(alpha: float) -> float:
    """Relaxed-cutter constant of an ``alpha``-demicontraction: ``2/(1-alpha)``."""
    return spc_to_rfne(alpha)


def relaxed_cutter_to_demicontraction(lam: float) -> float:
    """Demicontraction constant of a ``lam``-relaxed cutter: ``(lam-2)/lam``."""
    return rfne_to_spc(lam)


def relax_rfne(lam: float, mu: float) -> float:
    """RFNE constant after a ``mu``-relaxation: relaxations compose multiplicatively."""
    _check_positive(lam, "lam")
    _check_positive(mu, "mu")
    return lam * mu


def relax_demicontraction(alpha: float, mu: float) -> float:
    """Demicontraction constant of the ``mu``-relaxation of an ``alpha``-demicontraction.

    Returns ``(mu + alpha - 1)/mu``, which is again < 1.
    """
    _check_lt_one(alpha, "alpha")
    _check_positive(mu, "mu")
    return (mu + alpha - 1.0) / mu


@dataclass(frozen=True)
class CompositionVerdict:
    """Outcome of the two-operator composition constant.

    Attributes
    ----------
    nu_star : float or None
        The unique solution of ``(1 - 2/nu)^2 = 4(1/lam - 1/nu)(1/mu - 1/nu)``;
        absent exactly when ``lam * mu == 4`` (no solution, or every nu when
        ``lam == mu == 2``).
    certified : bool
        True when ``lam * mu < 4``: the composition of a ``lam``- and a
        ``mu``-RFNE operator (or relaxed cutter) is then ``nu_star``-RFNE
        (resp. a ``nu_star``-relaxed cutter).
    fix_intersection_ok : bool
        True when ``lam * mu < lam + mu``: the fixed points of the composition
        are exactly the common fixed points.
    notes : str or None
        Reason when not certified.
    """

    nu_star: Optional[float]
    certified: bool
    fix_intersection_ok: bool
    notes: Optional[str] = None


def nu_star_value(lam, mu):
    """Vectorized composition constant ``4(lam + mu - lam*mu)/(4 - lam*mu)``.

    Returns NaN where ``lam * mu == 4``.  Inputs may be scalars or arrays.
    """
    lam = np.asarray(lam, dtype=float)
    mu = np.asarray(mu, dtype=float)
    prod = lam * mu
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(prod == 4.0, np.nan, 4.0 * (lam + mu - prod) / (4.0 - prod))
    if out.ndim == 0:
        return float(out)
    return out


def nu_star(lam: float, mu: float) -> CompositionVerdict:
    """Composition constant for a ``lam``- and a ``mu``-relaxation, with certification.

    ``certified`` is True only on the open region ``lam * mu < 4``; on
    ``lam * mu == 4`` the constant does not exist and past it the sign of the
    value no longer carries a class meaning.
    """
    _check_positive(lam, "lam")
    _check_positive(mu, "mu")
    prod = lam * mu
    fix_ok = prod < lam + mu
    if prod == 4.0:
        note = ("every nu != 0 solves the composition equation"
                if lam == 2.0 and mu == 2.0
                else "composition equation has no solution at lam*mu = 4")
        return CompositionVerdict(None, False, fix_ok, note)
    value = 4.0 * (lam + mu - prod) / (4.0 - prod)
    if prod < 4.0:
        return CompositionVerdict(value, True, fix_ok, None)
    return CompositionVerdict(value, False, fix_ok, "lam*mu > 4: composition carries no class")


def gamma_star(alpha: float, beta: float) -> float:
    """Sharp SPC constant ``alpha*beta/(alpha + beta)`` of a composition.

    Requires ``alpha, beta < 1`` and the strict condition
    ``alpha + beta < alpha*beta``; outside it the composition is uncertified
    and :class:`CompositionUncertifiedError` is raised.
    """
    _check_lt_one(alpha, "alpha")
    _check_lt_one(beta, "beta")
    if not alpha + beta < alpha * beta:
        raise CompositionUncertifiedError(
            f"composition uncertified: alpha + beta = {alpha + beta!r} is not < "
            f"alpha*beta = {alpha * beta!r}"
        )
    return alpha * beta / (alpha + beta)


class ChainGamma(NamedTuple):
    """Result of the m-fold chain constant: ``value`` is None when the theorem is silent."""

    value: Optional[float]
    reason: Optional[str]


def chain_gamma(alphas: Sequence[float]) -> ChainGamma:
    """Demicontraction constant of an m-fold composition: ``(sum 1/alpha_i)^(-1)``.

    Each ``alpha_i`` must lie in ``(-inf, 1)`` and be nonzero, with at most one
    positive entry.  The constant applies only when it is < 1; otherwise the
    value is absent with a reason (the composition theorem is silent there).
    """
    alphas = [float(a) for a in alphas]
    if not alphas:
        raise ValueError("at least one parameter is required")
    for a in alphas:
        if a == 0.0:
            raise ValueError("parameters must be nonzero")
        _check_lt_one(a, "alpha")
    if sum(1 for a in alphas if a > 0) > 1:
        raise ValueError("at most one parameter may be positive")
    recip = sum(1.0 / a for a in alphas)
    if recip == 0.0:
        return ChainGamma(None, "reciprocal sum is zero; constant undefined")
    value = 1.0 / recip
    if not value < 1.0:
        return ChainGamma(None, f"chain constant {value} is not < 1")
    return ChainGamma(value, None)


def lemma_A_holds(lam, mu):
    """Check ``lam*mu < 4  =>  lam + mu > lam*mu`` (vacuously true otherwise).

    Accepts scalars or arrays; the implication is a theorem, so this returns
    True everywhere on ``lam, mu > 0`` and exists as a mass-checkable predicate.
    """
    lam = np.asarray(lam, dtype=float)
    mu = np.asarray(mu, dtype=float)
    if np.any(lam <= 0) or np.any(mu <= 0):
        raise ValueError("lam and mu must be positive")
    prod = lam * mu
    out = ~(prod < 4.0) | (lam + mu > prod)
    if out.ndim == 0:
        return bool(out)
    return out


def lemma_B_holds(alpha, beta):
    """Check both directions of the sharp composition condition in SPC form.

    (i)  ``alpha + beta < alpha*beta`` implies ``alpha + beta < 0`` and
         ``alpha*beta/(alpha + beta) < 1``.
    (ii) If ``alpha*beta/(alpha + beta)`` lies in ``(0, 1)`` (equivalently the
         reciprocal sum ``1/alpha + 1/beta`` exceeds 1) and at most one of
         ``alpha, beta`` is >= 0, then ``alpha + beta < alpha*beta``.

    Accepts scalars or arrays with entries < 1.
    """
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if np.any(alpha >= 1) or np.any(beta >= 1):
        raise ValueError("alpha and beta must be < 1")
    s = alpha + beta
    p = alpha * beta
    with np.errstate(divide="ignore", invalid="ignore"):
        quot = np.where(s != 0.0, p / s, np.inf)
    part_i = ~(s < p) | ((s < 0.0) & (quot < 1.0))
    at_most_one_nonneg = ~((alpha >= 0.0) & (beta >= 0.0))
    part_ii = ~((quot > 0.0) & (quot < 1.0) & at_most_one_nonneg) | (s < p)
    out = part_i & part_ii
    if out.ndim == 0:
        return bool(out)
    return out
