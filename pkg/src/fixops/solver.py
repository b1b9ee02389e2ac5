"""Generic relaxed fixed-point iteration with schedules, traces, and presets.

The driver runs ``x^{k+1} = x^k + lam_k * sigma(x^k) * (V(x^k) - x^k)`` for a
base operator ``V``, a per-iteration relaxation schedule ``lam_k`` and an
optional point-dependent relaxation function ``sigma`` (``sigma = 1`` when
absent).  Convergence is declared on the residual ``||V(x^k) - x^k||`` of the
base operator, so different ``sigma`` choices share stopping semantics.

Presets build the named methods:

* ``preset_km``        the plain relaxed iteration of an FNE operator or cutter,
* ``preset_maruster``  the same for a demicontraction, with the widened
  schedule range ``[eps, 1 - alpha - eps]``,
* ``preset_dr``        averaged alternating reflections,
* ``preset_raspc``     the composed relaxation step with the fixed factor
  ``1/nu_star``,
* ``preset_eadc``      the extrapolated step ``1/tau(x)`` for operators with a
  common fixed point,
* ``preset_moudafi``   the split common fixed point iteration through a linear
  map.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional, Union

import numpy as np

from . import parameter_algebra as pa
from .errors import FejerViolationError, SigmaEvaluationError
from .extrapolation import tau_star_common
from .hilbert import LinearMap, as_point
from .operators import Operator, PrimitiveSet, compose, landweber, projection, relax

__all__ = [
    "Status",
    "TraceRow",
    "IterationTrace",
    "StepRule",
    "StoppingRule",
    "iterate",
    "preset_km",
    "preset_maruster",
    "preset_dr",
    "preset_raspc",
    "preset_eadc",
    "preset_moudafi",
    "fejer_check",
    "atomic_write_text",
]

_DIVERGE_NORM = 1e12


class Status(Enum):
    CONVERGED = "Converged"
    MAX_ITERS = "MaxIters"
    STALLED = "Stalled"
    DIVERGED = "Diverged"


@dataclass(frozen=True)
class TraceRow:
    k: int
    x: np.ndarray
    residual: float
    step: float
    dist_to_ref: Optional[float] = None


def _fmt(value: float) -> str:
    return format(value, ".17g")


@dataclass
class IterationTrace:
    """Recorded run: one row per visited iterate, plus the final status."""

    rows: list[TraceRow]
    status: Status
    config: dict = field(default_factory=dict)

    @property
    def iterations(self) -> int:
        return self.rows[-1].k if self.rows else 0

    @property
    def final_x(self) -> np.ndarray:
        return self.rows[-1].x

    @property
    def final_residual(self) -> float:
        return self.rows[-1].residual

    @property
    def residuals(self) -> np.ndarray:
        return np.array([r.residual for r in self.rows])

    @property
    def distances(self) -> Optional[np.ndarray]:
        if not self.rows or self.rows[0].dist_to_ref is None:
            return None
        return np.array([r.dist_to_ref for r in self.rows])

    def csv_text(self) -> str:
        dim = self.rows[0].x.size if self.rows else 0
        header = "k,residual,step,dist_to_ref," + ",".join(f"x_{i}" for i in range(dim))
        lines = [header]
        for r in self.rows:
            dist = "" if r.dist_to_ref is None else _fmt(r.dist_to_ref)
            coords = ",".join(_fmt(v) for v in r.x)
            lines.append(f"{r.k},{_fmt(r.residual)},{_fmt(r.step)},{dist},{coords}")
        return "\n".join(lines) + "\n"

    def json_dict(self) -> dict:
        return {
            "status": self.status.value,
            "config": self.config,
            "rows": [
                {
                    "k": r.k,
                    "residual": r.residual,
                    "step": r.step,
                    "dist_to_ref": r.dist_to_ref,
                    "x": r.x.tolist(),
                }
                for r in self.rows
            ],
        }

    def write_csv(self, path) -> None:
        atomic_write_text(path, self.csv_text())

    def write_json(self, path) -> None:
        atomic_write_text(path, json.dumps(self.json_dict(), indent=1, sort_keys=True) + "\n")


def atomic_write_text(path, text: str) -> None:
    """Write via a temporary file in the target directory, then rename."""
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


@dataclass
class StepRule:
    """Per-iteration relaxation: a schedule ``k -> lam_k`` plus optional ``sigma``.

    ``lambda_schedule`` may be a constant or a callable.  The monotonicity
    guarantees cover schedules inside ``[epsilon, 2 - epsilon]``; out-of-range
    values are permitted (for demonstration of failure modes) but disable the
    in-run distance-monotonicity assertion.  ``sigma_certified`` marks a
    ``sigma`` that provably keeps the relaxed step a cutter relaxation
    (presets set it; leave False for ad-hoc functions).
    """

    lambda_schedule: Union[float, Callable[[int], float]] = 1.0
    sigma: Optional[Callable[[np.ndarray], float]] = None
    epsilon: float = 0.05
    sigma_certified: bool = False

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon!r}")

    def lambda_at(self, k: int) -> float:
        if callable(self.lambda_schedule):
            value = float(self.lambda_schedule(k))
        else:
            value = float(self.lambda_schedule)
        if not np.isfinite(value) or value <= 0:
            raise ValueError(f"schedule produced a nonpositive value {value!r} at k={k}")
        return value

    def in_range(self, lam_k: float) -> bool:
        return self.epsilon <= lam_k <= 2.0 - self.epsilon

    def sigma_at(self, x) -> float:
        if self.sigma is None:
            return 1.0
        value = float(self.sigma(x))
        if not (np.isfinite(value) and value > 0):
            raise SigmaEvaluationError(value, np.asarray(x, dtype=float).copy())
        return value


@dataclass
class StoppingRule:
    """Residual tolerance, iteration cap, optional stall detector."""

    residual_tol: float = 1e-10
    max_iters: int = 1000
    stall_window: Optional[int] = None
    stall_min_decrease: float = 0.0

    def __post_init__(self):
        if not self.residual_tol > 0:
            raise ValueError("residual_tol must be > 0")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.stall_window is not None and self.stall_window < 1:
            raise ValueError("stall_window must be >= 1")


def iterate(V: Operator, rule: StepRule, stop: StoppingRule, x0,
            reference=None, config_echo: Optional[dict] = None,
            enforce_fejer: bool = True) -> IterationTrace:
    """Run the relaxed iteration from ``x0`` until a stopping condition fires.

    Rows record the iterate, the base residual ``||V(x^k) - x^k||``, the
    applied step factor ``lam_k * sigma(x^k)`` and, when ``reference`` is
    given, the distance to it.  When the step is certifiably a cutter
    relaxation with an in-range schedule, the distance to ``reference`` must
    not grow; a growth beyond 1e-10 raises :class:`FejerViolationError`
    (disable with ``enforce_fejer=False``).  Nonfinite or exploding iterates
    terminate with ``Status.DIVERGED``, not an exception.
    """
    x = as_point(x0, dim=V.dim)
    z = None if reference is None else as_point(reference, dim=x.size)
    lam_cutter = V.certificate.relaxed_cutter_lambda() if V.certificate else None

    rows: list[TraceRow] = []
    status = Status.MAX_ITERS
    k = 0
    while True:
        v = V(x)
        if not np.all(np.isfinite(v)):
            status = Status.DIVERGED
            break
        residual = float(np.linalg.norm(v - x))
        lam_k = rule.lambda_at(k)
        sigma_x = rule.sigma_at(x)
        step = lam_k * sigma_x
        dist = None if z is None else float(np.linalg.norm(x - z))
        rows.append(TraceRow(k, x.copy(), residual, step, dist))

        if residual <= stop.residual_tol:
            status = Status.CONVERGED
            break
        if (stop.stall_window is not None and k >= stop.stall_window
                and rows[k - stop.stall_window].residual - residual < stop.stall_min_decrease):
            status = Status.STALLED
            break
        if k >= stop.max_iters:
            status = Status.MAX_ITERS
            break

        x_next = x + step * (v - x)
        if not np.all(np.isfinite(x_next)) or float(np.linalg.norm(x_next)) > _DIVERGE_NORM:
            status = Status.DIVERGED
            break
        if (enforce_fejer and z is not None
                and _step_certified(rule, lam_cutter, lam_k, sigma_x)):
            d_next = float(np.linalg.norm(x_next - z))
            if d_next > dist + 1e-10:
                raise FejerViolationError(k, d_next - dist)
        x = x_next
        k += 1

    return IterationTrace(rows, status, dict(config_echo or {}))


def _step_certified(rule: StepRule, lam_cutter, lam_k: float, sigma_x: float) -> bool:
    # without sigma the step is the lam_k*lam_cutter relaxation of a cutter,
    # which keeps distances to fixed points monotone exactly when that
    # product stays within 2; certified sigma rules additionally need an
    # in-range schedule
    if rule.sigma is None:
        return lam_cutter is not None and lam_k * lam_cutter <= 2.0 + 1e-12
    return rule.sigma_certified and rule.in_range(lam_k)


# --------------------------------------------------------------------------
# presets


def preset_km(V: Operator, schedule: Union[float, Callable[[int], float]] = 1.0,
              epsilon: float = 0.05) -> tuple[Operator, StepRule]:
    """Plain relaxed iteration of a firmly nonexpansive operator or cutter.

    ``V`` must carry a certificate placing it at relaxed-cutter constant 1
    (FNE, cutter, or an equivalent tag); the schedule stays in
    ``[epsilon, 2 - epsilon]``.
    """
    lam = V.certificate.relaxed_cutter_lambda() if V.certificate else None
    if lam != 1.0:
        raise ValueError(
            "operator must be certified FNE or cutter; for a general "
            "demicontraction use preset_maruster"
        )
    rule = StepRule(lambda_schedule=schedule, epsilon=epsilon)
    if not callable(schedule) and not rule.in_range(float(schedule)):
        raise ValueError(f"schedule {schedule!r} outside [{epsilon}, {2 - epsilon}]")
    return V, rule


def preset_maruster(V: Operator, schedule: Union[float, Callable[[int], float], None] = None,
                    epsilon: float = 0.05,
                    alpha: Optional[float] = None) -> tuple[Operator, StepRule]:
    """Relaxed iteration of a demicontraction with the widened schedule range.

    For a constant ``alpha < 1`` the admissible schedule is
    ``[epsilon, 1 - alpha - epsilon]``; the default is the midpoint
    ``(1 - alpha)/2``, which relaxes the underlying cutter by exactly 1.
    """
    if alpha is None:
        alpha = V.certificate.demicontraction_alpha() if V.certificate else None
    if alpha is None:
        raise ValueError("a demicontraction constant is required (certificate or alpha=)")
    hi = 1.0 - alpha - epsilon
    if hi <= epsilon:
        raise ValueError(f"empty schedule range [{epsilon}, {hi}] for alpha = {alpha!r}")
    if schedule is None:
        schedule = (1.0 - alpha) / 2.0
    if not callable(schedule) and not epsilon <= float(schedule) <= hi:
        raise ValueError(f"schedule {schedule!r} outside [{epsilon}, {hi}]")
    return V, StepRule(lambda_schedule=schedule, epsilon=epsilon)


def preset_dr(A: PrimitiveSet, B: PrimitiveSet) -> tuple[Operator, StepRule]:
    """Averaged alternating reflections: the midpoint relaxation of the
    double-reflection composition, with unit schedule.

    The base operator is firmly nonexpansive, so the plain iteration already
    converges whenever it has a fixed point (equivalently, the sets meet).
    """
    reflect_a = relax(projection(A), 2.0)
    reflect_b = relax(projection(B), 2.0)
    V = relax(compose(reflect_b, reflect_a), 0.5)
    V.name = f"DR[{A!r}, {B!r}]"
    return V, StepRule(lambda_schedule=1.0)


def _validated_pair(lam: float, mu: float):
    verdict = pa.nu_star(lam, mu)
    if not verdict.certified:
        raise ValueError(
            f"relaxation pair rejected: lam*mu = {lam * mu!r} must be < 4 ({verdict.notes})"
        )
    return verdict


def preset_raspc(A: PrimitiveSet, B: PrimitiveSet, lam: float, mu: float,
                 schedule: Union[float, Callable[[int], float]] = 1.0,
                 epsilon: float = 0.05) -> tuple[Operator, StepRule]:
    """Relaxed alternating composition with the fixed step factor ``1/nu_star``.

    The base operator ``(P_B)_mu o (P_A)_lam`` carries the sharp certificate,
    and the constant relaxation by its reciprocal makes each step a cutter
    relaxation for any schedule in ``[epsilon, 2 - epsilon]``.
    """
    verdict = _validated_pair(lam, mu)
    V = compose(relax(projection(B), mu), relax(projection(A), lam))
    inv = 1.0 / verdict.nu_star
    return V, StepRule(lambda_schedule=schedule, sigma=lambda x: inv,
                       epsilon=epsilon, sigma_certified=True)


def preset_eadc(A: PrimitiveSet, B: PrimitiveSet, lam: float, mu: float,
                schedule: Union[float, Callable[[int], float]] = 1.0,
                epsilon: float = 0.05) -> tuple[Operator, StepRule]:
    """Extrapolated alternating step ``1/tau(x)`` for sets with a common point.

    ``tau(x)`` is the per-point constant (never above ``nu_star``), so the
    step length always dominates the fixed ``1/nu_star`` relaxation.  The
    caller asserts that the sets actually intersect.
    """
    _validated_pair(lam, mu)
    T = relax(projection(A), lam)
    U = relax(projection(B), mu)
    V = compose(U, T)

    def sigma(x):
        return 1.0 / tau_star_common(T, U, lam, mu, x)

    return V, StepRule(lambda_schedule=schedule, sigma=sigma,
                       epsilon=epsilon, sigma_certified=True)


def preset_moudafi(S: Operator, U: Operator, A: LinearMap, lam: float, mu: float,
                   schedule: Union[float, Callable[[int], float]] = 1.0,
                   epsilon: float = 0.05,
                   alpha: Optional[float] = None,
                   beta: Optional[float] = None) -> tuple[Operator, StepRule]:
    """Split common fixed point iteration ``(U_mu o (L[S])_lam)`` through ``A``.

    ``S`` acts on the range of ``A`` and ``U`` on its domain; their
    demicontraction constants (read from certificates, or passed explicitly)
    relax to ``g = (lam + a - 1)/lam`` and ``d = (mu + b - 1)/mu``, and the
    pair must satisfy the strict composition condition ``g + d < g*d``.  The
    constant step ``1/tau`` with ``tau = 2(g + d)/(g + d - g*d)`` then makes
    every step a cutter relaxation.
    """
    if alpha is None:
        alpha = S.certificate.demicontraction_alpha() if S.certificate else None
    if beta is None:
        beta = U.certificate.demicontraction_alpha() if U.certificate else None
    if alpha is None or beta is None:
        raise ValueError("demicontraction constants are required (certificates or alpha=/beta=)")
    g = pa.relax_demicontraction(alpha, lam)
    d = pa.relax_demicontraction(beta, mu)
    if not g + d < g * d:
        raise ValueError(
            "split preset rejected: relaxed constants g = "
            f"{g!r}, d = {d!r} violate the strict condition g + d < g*d "
            f"(g + d = {g + d!r}, g*d = {g * d!r})"
        )
    T = landweber(S, A)
    V = compose(relax(U, mu), relax(T, lam))
    tau = 2.0 * (g + d) / (g + d - g * d)
    inv = 1.0 / tau
    return V, StepRule(lambda_schedule=schedule, sigma=lambda x: inv,
                       epsilon=epsilon, sigma_certified=True)


def fejer_check(trace: IterationTrace, z) -> float:
    """Worst growth of ``||x^k - z||`` along the trace (<= 0 means monotone)."""
    z = as_point(z)
    if len(trace.rows) < 2:
        return 0.0
    dists = np.array([float(np.linalg.norm(r.x - z)) for r in trace.rows])
    return float(np.max(np.diff(dists)))
