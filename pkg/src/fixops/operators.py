"""Operator constructors: projections, relaxations, compositions, combinations.

An :class:`Operator` is an evaluatable self-map of R^n carrying an optional
:class:`ClassCertificate` (which operator class it provably belongs to, with
parameter) and an optional fixed-set descriptor (a :class:`PrimitiveSet` or an
:class:`Intersection`), which tests use to produce known fixed points.

Certificates propagate only along proven rules; any combination not covered by
one yields an uncertified operator, never a guess.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np

from . import parameter_algebra as pa
from .errors import (
    DimensionMismatchError,
    MissingNormError,
    SigmaEvaluationError,
)
from .hilbert import LinearMap, ensure_batch

__all__ = [
    "ClassTag",
    "ClassCertificate",
    "PrimitiveSet",
    "Hyperplane",
    "Halfspace",
    "Ball",
    "Box",
    "Intersection",
    "Operator",
    "project",
    "projection",
    "identity",
    "relax",
    "generalized_relax",
    "compose",
    "convex_combination",
    "landweber",
]


# --------------------------------------------------------------------------
# class certificates


class ClassTag(Enum):
    NE = "NE"
    FNE = "FNE"
    CUTTER = "Cutter"
    RFNE = "RFNE"
    SPC = "SPC"
    RELAXED_CUTTER = "RelaxedCutter"
    DEMICONTRACTION = "Demicontraction"


_PARAMETRIC = {ClassTag.RFNE, ClassTag.SPC, ClassTag.RELAXED_CUTTER, ClassTag.DEMICONTRACTION}


@dataclass(frozen=True)
class ClassCertificate:
    """Tagged operator-class parameter.

    ``RFNE`` and ``RelaxedCutter`` carry a relaxation constant ``lam > 0``;
    ``SPC`` and ``Demicontraction`` carry a constant ``alpha < 1``; the
    remaining tags carry no parameter.
    """

    tag: ClassTag
    parameter: Optional[float] = None

    def __post_init__(self):
        if self.tag in _PARAMETRIC:
            if self.parameter is None:
                raise ValueError(f"{self.tag.value} certificate requires a parameter")
            if self.tag in (ClassTag.RFNE, ClassTag.RELAXED_CUTTER):
                if not self.parameter > 0:
                    raise ValueError(f"{self.tag.value} parameter must be > 0")
            else:
                if not self.parameter < 1:
                    raise ValueError(f"{self.tag.value} parameter must be < 1")
        elif self.parameter is not None:
            raise ValueError(f"{self.tag.value} certificate carries no parameter")

    # -- family views -------------------------------------------------

    def rfne_lambda(self) -> Optional[float]:
        """Relaxation constant in the point-pair (RFNE) family, if a member."""
        if self.tag is ClassTag.NE:
            return 2.0
        if self.tag is ClassTag.FNE:
            return 1.0
        if self.tag is ClassTag.RFNE:
            return self.parameter
        if self.tag is ClassTag.SPC:
            return pa.spc_to_rfne(self.parameter)
        return None

    def relaxed_cutter_lambda(self) -> Optional[float]:
        """Relaxation constant in the fixed-point (relaxed cutter) family.

        Point-pair classes qualify through their fixed points: an RFNE
        operator with a fixed point is a relaxed cutter with the same
        constant.
        """
        if self.tag is ClassTag.CUTTER:
            return 1.0
        if self.tag is ClassTag.RELAXED_CUTTER:
            return self.parameter
        if self.tag is ClassTag.DEMICONTRACTION:
            return pa.demicontraction_to_relaxed_cutter(self.parameter)
        return self.rfne_lambda()

    def demicontraction_alpha(self) -> Optional[float]:
        """Demicontraction constant, derived from any recognized class."""
        if self.tag in (ClassTag.SPC, ClassTag.DEMICONTRACTION):
            return self.parameter
        lam = self.relaxed_cutter_lambda()
        if lam is None:
            return None
        return pa.relaxed_cutter_to_demicontraction(lam)

    def __str__(self):
        if self.parameter is None:
            return self.tag.value
        return f"{self.tag.value}({self.parameter:g})"

    # -- constructors --------------------------------------------------

    @staticmethod
    def ne():
        return ClassCertificate(ClassTag.NE)

    @staticmethod
    def fne():
        return ClassCertificate(ClassTag.FNE)

    @staticmethod
    def cutter():
        return ClassCertificate(ClassTag.CUTTER)

    @staticmethod
    def rfne(lam: float):
        return ClassCertificate(ClassTag.RFNE, float(lam))

    @staticmethod
    def spc(alpha: float):
        return ClassCertificate(ClassTag.SPC, float(alpha))

    @staticmethod
    def relaxed_cutter(lam: float):
        return ClassCertificate(ClassTag.RELAXED_CUTTER, float(lam))

    @staticmethod
    def demicontraction(alpha: float):
        return ClassCertificate(ClassTag.DEMICONTRACTION, float(alpha))


# --------------------------------------------------------------------------
# primitive convex sets with closed-form metric projections


class PrimitiveSet:
    """Closed convex subset of R^n with a closed-form metric projection."""

    dim: int

    def project(self, x):
        """Metric projection of a point ``(n,)`` or batch ``(m, n)``."""
        X, single = self._validated(x)
        P = self._project(X)
        return P[0] if single else P

    def contains(self, x, tol: float = 1e-10):
        """Membership test (within ``tol``); scalar for a point, array for a batch."""
        X, single = self._validated(x)
        m = self._contains(X, tol)
        return bool(m[0]) if single else m

    def sample(self, rng, n: int = 1, scale: float = 1.0) -> np.ndarray:
        """Draw ``n`` points of the set, shape ``(n, dim)``."""
        return self._project(scale * rng.standard_normal((n, self.dim)))

    def feature_points(self) -> list[np.ndarray]:
        """Representative points (used to center verification samplers)."""
        raise NotImplementedError

    def _validated(self, x):
        X, single = ensure_batch(x)
        if X.shape[1] != self.dim:
            raise DimensionMismatchError(self.dim, X.shape[1], what="point")
        return X, single

    def _project(self, X):
        raise NotImplementedError

    def _contains(self, X, tol):
        raise NotImplementedError


def _validated_normal(normal):
    a = np.asarray(normal, dtype=float)
    if a.ndim != 1 or a.size < 1:
        raise ValueError("normal must be a 1-D vector")
    if not np.all(np.isfinite(a)):
        raise ValueError("normal must be finite")
    if not np.any(a):
        raise ValueError("normal must be nonzero")
    return a


class Hyperplane(PrimitiveSet):
    """``{x : <a, x> = b}`` for a nonzero normal ``a``."""

    def __init__(self, normal, offset: float):
        self.normal = _validated_normal(normal)
        self.offset = float(offset)
        self.dim = self.normal.size
        self._nn = float(self.normal @ self.normal)

    def _project(self, X):
        return X - np.outer((X @ self.normal - self.offset) / self._nn, self.normal)

    def _contains(self, X, tol):
        scale = 1.0 + abs(self.offset) + np.sqrt(self._nn) * np.linalg.norm(X, axis=1)
        return np.abs(X @ self.normal - self.offset) <= tol * scale

    def feature_points(self):
        return [self.normal * (self.offset / self._nn)]

    def __repr__(self):
        return f"Hyperplane(normal={self.normal.tolist()}, offset={self.offset})"


class Halfspace(PrimitiveSet):
    """``{x : <a, x> <= b}`` for a nonzero normal ``a``."""

    def __init__(self, normal, offset: float):
        self.normal = _validated_normal(normal)
        self.offset = float(offset)
        self.dim = self.normal.size
        self._nn = float(self.normal @ self.normal)

    def _project(self, X):
        excess = np.maximum(X @ self.normal - self.offset, 0.0)
        return X - np.outer(excess / self._nn, self.normal)

    def _contains(self, X, tol):
        scale = 1.0 + abs(self.offset) + np.sqrt(self._nn) * np.linalg.norm(X, axis=1)
        return X @ self.normal - self.offset <= tol * scale

    def feature_points(self):
        return [self.normal * (self.offset / self._nn)]

    def __repr__(self):
        return f"Halfspace(normal={self.normal.tolist()}, offset={self.offset})"


class Ball(PrimitiveSet):
    """Closed ball with positive radius."""

    def __init__(self, center, radius: float):
        c = np.asarray(center, dtype=float)
        if c.ndim != 1 or not np.all(np.isfinite(c)):
            raise ValueError("center must be a finite 1-D vector")
        if not (np.isfinite(radius) and radius > 0):
            raise ValueError("radius must be > 0")
        self.center = c
        self.radius = float(radius)
        self.dim = c.size

    def _project(self, X):
        D = X - self.center
        dist = np.linalg.norm(D, axis=1)
        # dist == 0 (the center itself) projects to the center
        factor = np.where(dist > self.radius, self.radius / np.where(dist == 0, 1.0, dist), 1.0)
        return self.center + D * factor[:, None]

    def _contains(self, X, tol):
        return np.linalg.norm(X - self.center, axis=1) <= self.radius + tol * (1.0 + self.radius)

    def sample(self, rng, n: int = 1, scale: float = 1.0) -> np.ndarray:
        dirs = rng.standard_normal((n, self.dim))
        dirs /= np.maximum(np.linalg.norm(dirs, axis=1, keepdims=True), 1e-300)
        radii = self.radius * rng.random(n) ** (1.0 / self.dim)
        return self.center + dirs * radii[:, None]

    def feature_points(self):
        e = np.zeros(self.dim)
        e[0] = self.radius
        return [self.center.copy(), self.center + e]

    def __repr__(self):
        return f"Ball(center={self.center.tolist()}, radius={self.radius})"


class Box(PrimitiveSet):
    """Axis-aligned box ``[lower, upper]`` with ``lower <= upper`` componentwise."""

    def __init__(self, lower, upper):
        lo = np.asarray(lower, dtype=float)
        hi = np.asarray(upper, dtype=float)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("lower and upper must be 1-D vectors of equal dimension")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("bounds must be finite")
        if np.any(lo > hi):
            raise ValueError("lower must be <= upper componentwise")
        self.lower = lo
        self.upper = hi
        self.dim = lo.size

    def _project(self, X):
        return np.clip(X, self.lower, self.upper)

    def _contains(self, X, tol):
        span = 1.0 + np.abs(self.lower) + np.abs(self.upper)
        return np.all((X >= self.lower - tol * span) & (X <= self.upper + tol * span), axis=1)

    def sample(self, rng, n: int = 1, scale: float = 1.0) -> np.ndarray:
        return self.lower + rng.random((n, self.dim)) * (self.upper - self.lower)

    def feature_points(self):
        return [(self.lower + self.upper) / 2.0]

    def __repr__(self):
        return f"Box(lower={self.lower.tolist()}, upper={self.upper.tolist()})"


class Intersection:
    """Intersection of primitive sets, used as a fixed-set descriptor.

    Points are produced by cyclic projections, so sampling requires the
    intersection to be nonempty (and converges fast only when it is
    transversal).
    """

    def __init__(self, sets: Sequence[PrimitiveSet]):
        sets = list(sets)
        if not sets:
            raise ValueError("intersection of no sets")
        dims = {s.dim for s in sets}
        if len(dims) != 1:
            raise DimensionMismatchError(sets[0].dim, dims, what="set")
        self.sets = sets
        self.dim = sets[0].dim

    def contains(self, x, tol: float = 1e-10):
        flags = [s.contains(x, tol) for s in self.sets]
        return np.logical_and.reduce(flags)

    def sample(self, rng, n: int = 1, scale: float = 1.0, tol: float = 1e-12,
               max_sweeps: int = 20000) -> np.ndarray:
        out = np.empty((n, self.dim))
        for i in range(n):
            x = scale * rng.standard_normal(self.dim)
            for _ in range(max_sweeps):
                for s in self.sets:
                    x = s.project(x)
                if bool(self.contains(x, tol)):
                    break
            else:
                raise RuntimeError(
                    "cyclic projections did not reach the intersection "
                    "(it may be empty or tangential)"
                )
            out[i] = x
        return out

    def feature_points(self):
        pts: list[np.ndarray] = []
        for s in self.sets:
            pts.extend(s.feature_points())
        return pts

    def __repr__(self):
        return "Intersection(" + ", ".join(repr(s) for s in self.sets) + ")"


def _merge_fix(*descriptors):
    parts: list[PrimitiveSet] = []
    for d in descriptors:
        if d is None:
            return None
        parts.extend(d.sets if isinstance(d, Intersection) else [d])
    return Intersection(parts)


# --------------------------------------------------------------------------
# operator handles


class Operator:
    """Deterministic self-map of R^n with optional certificate and fixed set.

    ``fn`` must accept a batch ``(m, n)`` and return a batch of the same
    shape; :meth:`__call__` also accepts a single point ``(n,)``.
    """

    def __init__(self, fn: Callable[[np.ndarray], np.ndarray], dim: Optional[int] = None,
                 certificate: Optional[ClassCertificate] = None, fix=None,
                 name: str = "operator"):
        self.fn = fn
        self.dim = dim
        self.certificate = certificate
        self.fix = fix
        self.name = name

    def __call__(self, x):
        X, single = ensure_batch(x)
        if self.dim is not None and X.shape[1] != self.dim:
            raise DimensionMismatchError(self.dim, X.shape[1], what="point")
        Y = np.asarray(self.fn(X), dtype=float)
        if Y.shape != X.shape:
            raise ValueError(f"operator '{self.name}' returned shape {Y.shape} for input {X.shape}")
        return Y[0] if single else Y

    def residual(self, x):
        """``T(x) - x`` with the same batch semantics as evaluation."""
        return self(x) - np.asarray(x, dtype=float)

    @staticmethod
    def from_pointwise(fn, dim=None, certificate=None, fix=None, name="operator"):
        """Wrap a map defined on single points; batches fall back to a row loop."""

        def batched(X):
            return np.stack([np.asarray(fn(row), dtype=float) for row in X])

        return Operator(batched, dim=dim, certificate=certificate, fix=fix, name=name)

    def __repr__(self):
        cert = f", {self.certificate}" if self.certificate else ""
        return f"<Operator {self.name}{cert}>"


def project(primitive_set: PrimitiveSet, x):
    """Metric projection of ``x`` onto a primitive set."""
    return primitive_set.project(x)


def projection(primitive_set: PrimitiveSet) -> Operator:
    """The metric projection as an operator; firmly nonexpansive, fixes the set."""
    return Operator(
        primitive_set._project,
        dim=primitive_set.dim,
        certificate=ClassCertificate.fne(),
        fix=primitive_set,
        name=f"P[{primitive_set!r}]",
    )


def identity(dim: Optional[int] = None) -> Operator:
    """The identity operator (firmly nonexpansive)."""
    return Operator(lambda X: X, dim=dim, certificate=ClassCertificate.fne(), name="Id")


def _relaxed_certificate(cert: Optional[ClassCertificate], lam: float):
    if cert is None:
        return None
    if lam == 1.0:
        return cert
    tag = cert.tag
    if tag in (ClassTag.NE, ClassTag.FNE, ClassTag.RFNE):
        return ClassCertificate.rfne(pa.relax_rfne(cert.rfne_lambda(), lam))
    if tag is ClassTag.SPC:
        return ClassCertificate.spc(pa.relax_demicontraction(cert.parameter, lam))
    if tag in (ClassTag.CUTTER, ClassTag.RELAXED_CUTTER):
        base = 1.0 if tag is ClassTag.CUTTER else cert.parameter
        return ClassCertificate.relaxed_cutter(pa.relax_rfne(base, lam))
    if tag is ClassTag.DEMICONTRACTION:
        return ClassCertificate.demicontraction(pa.relax_demicontraction(cert.parameter, lam))
    return None


def relax(T: Operator, lam: float) -> Operator:
    """``lam``-relaxation ``x + lam*(T(x) - x)``; fixed points are preserved.

    Relaxations compose multiplicatively, and the certificate follows the
    operator's class family (RFNE constants multiply; SPC and demicontraction
    constants map through ``alpha -> (lam + alpha - 1)/lam``).
    """
    if not (np.isfinite(lam) and lam > 0):
        raise ValueError(f"relaxation parameter must be > 0, got {lam!r}")
    lam = float(lam)
    fn = T.fn

    def relaxed(X):
        return X + lam * (fn(X) - X)

    return Operator(
        relaxed,
        dim=T.dim,
        certificate=_relaxed_certificate(T.certificate, lam),
        fix=T.fix,
        name=f"({T.name})_{lam:g}",
    )


def generalized_relax(T: Operator, sigma: Callable[[np.ndarray], float]) -> Operator:
    """Point-dependent relaxation ``x + sigma(x)*(T(x) - x)``.

    ``sigma`` must return a finite positive value for every point (checked at
    evaluation time; violations raise :class:`SigmaEvaluationError` carrying
    the offending point).  Fixed points are preserved; no certificate is
    derivable in general, so none is attached.  When ``sigma >= 1`` with
    strict inequality somewhere off the fixed set, the result is an
    extrapolation of ``T``.
    """
    fn = T.fn

    def sigma_at(row):
        val = float(sigma(row))
        if not (np.isfinite(val) and val > 0):
            raise SigmaEvaluationError(val, row.copy())
        return val

    def relaxed(X):
        sig = np.array([sigma_at(row) for row in X])
        return X + sig[:, None] * (fn(X) - X)

    return Operator(relaxed, dim=T.dim, certificate=None, fix=T.fix, name=f"({T.name})_sigma")


def compose(U: Operator, T: Operator) -> Operator:
    """Composition ``U o T`` (apply ``T`` first) with certified constant when available.

    For a ``lam``- and ``mu``-relaxation with ``lam*mu < 4`` the composition
    is certified with the sharp constant ``nu_star(lam, mu)`` (RFNE for
    point-pair inputs, relaxed cutter otherwise).  At ``lam*mu >= 4`` no
    certificate is attached, except that two nonexpansive factors
    (``lam, mu <= 2``) still compose to a nonexpansive operator.  The fixed
    set descriptor is the intersection exactly when ``lam*mu < lam + mu``.
    """
    if T.dim is not None and U.dim is not None and T.dim != U.dim:
        raise DimensionMismatchError(U.dim, T.dim, what="operator")
    tfn, ufn = T.fn, U.fn

    cert = None
    lam = mu = None
    cT, cU = T.certificate, U.certificate
    if cT is not None and cU is not None:
        lam, mu = cT.rfne_lambda(), cU.rfne_lambda()
        if lam is not None and mu is not None:
            verdict = pa.nu_star(lam, mu)
            if verdict.certified:
                cert = ClassCertificate.rfne(verdict.nu_star)
            elif lam <= 2.0 and mu <= 2.0:
                cert = ClassCertificate.ne()
        else:
            lam, mu = cT.relaxed_cutter_lambda(), cU.relaxed_cutter_lambda()
            if lam is not None and mu is not None:
                verdict = pa.nu_star(lam, mu)
                if verdict.certified:
                    cert = ClassCertificate.relaxed_cutter(verdict.nu_star)

    fix = None
    if lam is not None and mu is not None and lam * mu < lam + mu:
        fix = _merge_fix(T.fix, U.fix)

    return Operator(
        lambda X: ufn(tfn(X)),
        dim=T.dim if T.dim is not None else U.dim,
        certificate=cert,
        fix=fix,
        name=f"{U.name} o {T.name}",
    )


def convex_combination(ops: Sequence[Operator], weights: Sequence[float]) -> Operator:
    """Pointwise convex combination ``sum w_i T_i``.

    The combined relaxation constant is the weighted mean of the factors'
    constants; in SPC/demicontraction form the combined constant is
    ``1 - (sum w_i/(1 - alpha_i))^(-1)``.  The fixed set is the intersection
    of the factors' fixed sets.
    """
    ops = list(ops)
    w = np.asarray(weights, dtype=float)
    if not ops:
        raise ValueError("at least one operator is required")
    if w.shape != (len(ops),):
        raise ValueError("one weight per operator is required")
    if np.any(w <= 0):
        raise ValueError("weights must be positive")
    if abs(float(w.sum()) - 1.0) > 1e-12:
        raise ValueError(f"weights must sum to 1, got {w.sum()!r}")
    dims = {op.dim for op in ops if op.dim is not None}
    if len(dims) > 1:
        raise DimensionMismatchError(min(dims), sorted(dims), what="operator")

    fns = [op.fn for op in ops]

    def combined(X):
        acc = w[0] * fns[0](X)
        for wi, fni in zip(w[1:], fns[1:]):
            acc = acc + wi * fni(X)
        return acc

    certs = [op.certificate for op in ops]
    cert = None
    if all(c is not None for c in certs):
        tags = {c.tag for c in certs}
        lams = [c.rfne_lambda() for c in certs]
        if tags == {ClassTag.SPC}:
            cert = ClassCertificate.spc(_combined_alpha(w, [c.parameter for c in certs]))
        elif all(l is not None for l in lams):
            cert = ClassCertificate.rfne(float(np.dot(w, lams)))
        elif tags == {ClassTag.DEMICONTRACTION}:
            cert = ClassCertificate.demicontraction(
                _combined_alpha(w, [c.parameter for c in certs])
            )
        else:
            lams = [c.relaxed_cutter_lambda() for c in certs]
            if all(l is not None for l in lams):
                cert = ClassCertificate.relaxed_cutter(float(np.dot(w, lams)))

    fix = _merge_fix(*[op.fix for op in ops])
    return Operator(
        combined,
        dim=next(iter(dims)) if dims else None,
        certificate=cert,
        fix=fix,
        name="convex(" + ", ".join(op.name for op in ops) + ")",
    )


def _combined_alpha(w, alphas):
    return 1.0 - 1.0 / float(np.sum(w / (1.0 - np.asarray(alphas))))


def landweber(S: Operator, A: LinearMap) -> Operator:
    """Pull a demicontraction ``S`` on the range space back through ``A``.

    Evaluates ``x + A*(S(Ax) - Ax)/||A||^2`` on the domain space.  The result
    inherits ``S``'s demicontraction constant, and fixes exactly the preimages
    of the fixed points of ``S``.  ``A`` must carry a cached norm estimate
    (see :func:`fixops.hilbert.estimate_norm`).
    """
    if A.cached_norm is None:
        raise MissingNormError()
    if A.cached_norm == 0.0:
        raise ValueError("cached norm is zero; the map must be nonzero")
    if S.dim is not None and S.dim != A.output_dim:
        raise DimensionMismatchError(A.output_dim, S.dim, what="operator")
    scale = 1.0 / A.cached_norm**2
    sfn = S.fn
    M = A.matrix

    def transformed(X):
        AX = X @ M.T
        return X + scale * ((sfn(AX) - AX) @ M)

    alpha = S.certificate.demicontraction_alpha() if S.certificate else None
    cert = ClassCertificate.demicontraction(alpha) if alpha is not None else None
    return Operator(transformed, dim=A.input_dim, certificate=cert, fix=None,
                    name=f"L[{S.name}]")
