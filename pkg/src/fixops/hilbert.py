"""Finite-dimensional real inner-product space primitives.

Points are plain 1-D ``numpy`` arrays of finite floats.  Everything in this
package works on a single point of shape ``(n,)`` or on a batch of points of
shape ``(m, n)``; helpers here normalize between the two.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatchError, ZeroOperatorError

Point = np.ndarray


def as_point(x, dim: int | None = None) -> np.ndarray:
    """Validate and return ``x`` as a 1-D float64 array.

    Raises
    ------
    ValueError
        If ``x`` is not 1-D, is empty, or contains NaN/Inf.
    DimensionMismatchError
        If ``dim`` is given and does not match.
    """
    a = np.asarray(x, dtype=float)
    if a.ndim != 1:
        raise ValueError(f"point must be 1-D, got shape {a.shape}")
    if a.size < 1:
        raise ValueError("point must have dimension >= 1")
    if not np.all(np.isfinite(a)):
        raise ValueError("point entries must be finite (no NaN/Inf)")
    if dim is not None and a.size != dim:
        raise DimensionMismatchError(dim, a.size)
    return a


def inner(x, y) -> float:
    """Euclidean inner product of two points of equal dimension."""
    xa = as_point(x)
    ya = as_point(y)
    if xa.size != ya.size:
        raise DimensionMismatchError(xa.size, ya.size)
    return float(xa @ ya)


def norm(x) -> float:
    """Euclidean norm ``sqrt(<x, x>)``."""
    return float(np.linalg.norm(as_point(x)))


def ensure_batch(x) -> tuple[np.ndarray, bool]:
    """Return ``(X, single)`` where ``X`` has shape ``(m, n)``.

    ``single`` is True when the input was a single point, so callers can
    squeeze the result back to shape ``(n,)``.
    """
    a = np.asarray(x, dtype=float)
    if a.ndim == 1:
        return a[None, :], True
    if a.ndim == 2:
        return a, False
    raise ValueError(f"expected shape (n,) or (m, n), got {a.shape}")


class LinearMap:
    """Dense linear map ``R^n -> R^m`` with adjoint and cached norm estimate.

    Parameters
    ----------
    matrix : array_like, shape (m, n)
        Rows index the output dimension.
    cached_norm : float, optional
        A previously computed spectral-norm estimate.
    """

    def __init__(self, matrix, cached_norm: float | None = None):
        a = np.asarray(matrix, dtype=float)
        if a.ndim != 2:
            raise ValueError(f"matrix must be 2-D, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("matrix entries must be finite")
        if cached_norm is not None and not (np.isfinite(cached_norm) and cached_norm >= 0):
            raise ValueError("cached_norm must be a nonnegative finite real")
        self.matrix = a
        self.cached_norm = cached_norm

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    @property
    def input_dim(self) -> int:
        return self.matrix.shape[1]

    @property
    def output_dim(self) -> int:
        return self.matrix.shape[0]

    def __call__(self, x):
        """Apply to a point ``(n,)`` or batch ``(k, n)``."""
        X, single = ensure_batch(x)
        if X.shape[1] != self.input_dim:
            raise DimensionMismatchError(self.input_dim, X.shape[1])
        out = X @ self.matrix.T
        return out[0] if single else out

    def adjoint(self, y):
        """Apply the adjoint (transpose) to ``(m,)`` or ``(k, m)``."""
        Y, single = ensure_batch(y)
        if Y.shape[1] != self.output_dim:
            raise DimensionMismatchError(self.output_dim, Y.shape[1])
        out = Y @ self.matrix
        return out[0] if single else out

    def __repr__(self):
        return f"LinearMap(shape={self.shape}, cached_norm={self.cached_norm})"


def estimate_norm(A: LinearMap, iters: int | None = None, seed: int = 0) -> float:
    """Estimate the spectral norm of ``A`` by power iteration on ``A*A``.

    The estimate is the square root of the Rayleigh quotient of ``A*A`` at the
    current iterate, which is monotone nondecreasing in the iteration count for
    a fixed seed.  The result is cached on ``A.cached_norm``.

    Parameters
    ----------
    A : LinearMap
        Must be nonzero.
    iters : int, optional
        Number of power iterations; defaults to ``10 * input_dim``.
    seed : int
        Seed for the deterministic start vector.
    """
    M = A.matrix
    if not np.any(M):
        raise ZeroOperatorError("cannot estimate the norm of the zero map")
    if iters is None:
        iters = 10 * A.input_dim
    if iters < 0:
        raise ValueError("iters must be >= 0")
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(A.input_dim)
    nv = np.linalg.norm(v)
    while nv == 0.0:  # probability zero, but keep the loop total
        v = rng.standard_normal(A.input_dim)
        nv = np.linalg.norm(v)
    v = v / nv
    for _ in range(iters):
        w = M.T @ (M @ v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            # start vector lies in the null space; restart from a fresh draw
            v = rng.standard_normal(A.input_dim)
            v /= np.linalg.norm(v)
            continue
        v = w / nw
    est = float(np.linalg.norm(M @ v))
    A.cached_norm = est
    return est
