"""Dense matrix primitives shared by the solvers.

Matrices are plain 2-D ``float64`` numpy arrays. Triangular factors are
ordinary square arrays whose off-triangle entries are exactly zero and whose
diagonals are strictly positive, which makes every Cholesky-type factor
unique.  The heavy lifting is delegated to BLAS/LAPACK through scipy.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import blas, lapack
from scipy.linalg import solve_triangular as _solve_triangular

__all__ = [
    "ShapeError",
    "NotPositiveDefiniteError",
    "PD_PIVOT_RTOL",
    "as_matrix",
    "matmul",
    "symmetrize",
    "gram_plus_lambda",
    "cholesky",
    "inverse_cholesky",
    "solve_triangular",
    "tri_matmul",
    "spd_solve",
    "BlockUpperFactor",
]

#: A Cholesky pivot at or below this fraction of the largest diagonal entry
#: is treated as a loss of positive definiteness.
PD_PIVOT_RTOL = 1e-14


class ShapeError(ValueError):
    """Operands have non-conforming shapes."""


class NotPositiveDefiniteError(np.linalg.LinAlgError):
    """Cholesky factorization met a non-positive (or negligible) pivot."""

    def __init__(self, pivot: int, value: float, message: str | None = None):
        self.pivot = pivot
        self.value = value
        if message is None:
            message = (
                f"matrix is not positive definite: pivot {pivot} "
                f"has value {value:.3e}"
            )
        super().__init__(message)


def as_matrix(x, name: str = "matrix") -> np.ndarray:
    """Return ``x`` as a 2-D float64 array, rejecting NaN/Inf."""
    a = np.asarray(x, dtype=np.float64)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {a.shape}")
    if not np.isfinite(a).all():
        raise ValueError(f"{name} contains NaN or Inf")
    return a


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product with an error message naming both shapes."""
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def symmetrize(r: np.ndarray) -> np.ndarray:
    """Average ``r`` with its transpose, in place when possible."""
    r += r.T
    r *= 0.5
    return r


def gram_plus_lambda(a: np.ndarray, lam: float) -> np.ndarray:
    """Return the exactly symmetric matrix ``A^T A + lam I``.

    Raises
    ------
    ValueError
        If ``lam`` is not strictly positive.
    """
    if not lam > 0:
        raise ValueError(f"ridge parameter must be positive, got {lam!r}")
    r = a.T @ a
    r[np.diag_indices_from(r)] += lam
    return symmetrize(r)


def _check_square(r: np.ndarray) -> None:
    if r.ndim != 2 or r.shape[0] != r.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {r.shape}")


def cholesky(r: np.ndarray) -> np.ndarray:
    """Lower-triangular ``L`` with ``L @ L.T == r`` and positive diagonal.

    Only the lower triangle of ``r`` is read.  A pivot ``L[i, i]**2`` that
    is not above ``PD_PIVOT_RTOL * max(diag(r))`` raises
    :class:`NotPositiveDefiniteError` carrying the offending index.
    """
    _check_square(r)
    if r.shape[0] == 0:
        return np.zeros((0, 0))
    c, info = lapack.dpotrf(r, lower=1, clean=1)
    if info < 0:
        raise ValueError(f"dpotrf: illegal argument {-info}")
    if info > 0:
        i = info - 1
        # The failing pivot is left in place by dpotrf.
        raise NotPositiveDefiniteError(i, float(c[i, i]))
    piv = np.diag(c) ** 2
    cutoff = PD_PIVOT_RTOL * float(np.max(np.diag(r)))
    bad = np.flatnonzero(piv <= cutoff)
    if bad.size:
        raise NotPositiveDefiniteError(int(bad[0]), float(piv[bad[0]]))
    return c


def inverse_cholesky(r: np.ndarray) -> np.ndarray:
    """Upper-triangular ``F`` with ``F @ F.T == inv(r)``.

    ``F`` is the inverse transpose of the Cholesky factor of ``r``; since
    that factor has a positive diagonal, so does ``F``.
    """
    low = cholesky(r)
    if low.shape[0] == 0:
        return low
    inv, info = lapack.dtrtri(low, lower=1)
    if info != 0:
        raise NotPositiveDefiniteError(info - 1, 0.0)
    return np.asfortranarray(inv.T)


def solve_triangular(
    t: np.ndarray, b: np.ndarray, *, lower: bool = False, trans: bool = False
) -> np.ndarray:
    """Solve ``op(t) @ x = b`` by substitution, ``op`` being identity or transpose."""
    _check_square(t)
    if b.ndim != 2 or b.shape[0] != t.shape[0]:
        raise ShapeError(f"cannot solve {t.shape} system with right side {b.shape}")
    return _solve_triangular(t, b, lower=lower, trans=1 if trans else 0,
                             check_finite=False)


def tri_matmul(
    t: np.ndarray,
    b: np.ndarray,
    *,
    lower: bool = False,
    trans: bool = False,
    right: bool = False,
) -> np.ndarray:
    """Multiply by a triangular matrix, touching only its triangle.

    Computes ``op(t) @ b`` (or ``b @ op(t)`` when ``right``), costing half
    the flops of a dense product.
    """
    _check_square(t)
    n = t.shape[0]
    if b.ndim != 2 or (b.shape[1] if right else b.shape[0]) != n:
        shapes = (b.shape, t.shape) if right else (t.shape, b.shape)
        raise ShapeError(f"cannot multiply {shapes[0]} by {shapes[1]}")
    if b.size == 0:
        return np.zeros(b.shape)
    return blas.dtrmm(1.0, t, b, side=int(right), lower=int(lower),
                      trans_a=int(trans))


def spd_solve(r: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Return ``inv(r) @ b`` for symmetric positive-definite ``r``."""
    low = cholesky(r)
    if b.ndim != 2 or b.shape[0] != r.shape[0]:
        raise ShapeError(f"cannot solve {r.shape} system with right side {b.shape}")
    x, info = lapack.dpotrs(low, b, lower=1)
    if info != 0:
        raise ValueError(f"dpotrs: illegal argument {-info}")
    return x


class BlockUpperFactor:
    """Upper-triangular factor grown by appending column blocks.

    The factor ``[[F, T], [0, G]]`` is stored as its leading dense block and
    the list of appended columns ``[T; G]``, so growing it never copies the
    existing entries and products skip the zero lower-left blocks.
    """

    def __init__(self, leading: np.ndarray):
        _check_square(leading)
        self._blocks = [np.asfortranarray(leading)]
        self._starts = [0]
        self.order = leading.shape[0]

    @property
    def blocks(self) -> list[np.ndarray]:
        return list(self._blocks)

    def append(self, t: np.ndarray, g: np.ndarray) -> None:
        """Grow the factor by the column block ``[t; g]``."""
        q = g.shape[0]
        if t.shape != (self.order, q) or g.shape != (q, q):
            raise ShapeError(
                f"block shapes {t.shape}, {g.shape} do not extend order {self.order}"
            )
        col = np.empty((self.order + q, q), order="F")
        col[: self.order] = t
        col[self.order:] = g
        self._blocks.append(col)
        self._starts.append(self.order)
        self.order += q

    def matmul(self, x: np.ndarray) -> np.ndarray:
        """Return ``F @ x``."""
        if x.ndim != 2 or x.shape[0] != self.order:
            raise ShapeError(f"cannot multiply ({self.order}, {self.order}) by {x.shape}")
        out = np.zeros((self.order, x.shape[1]))
        lead = self._blocks[0]
        k0 = lead.shape[0]
        out[:k0] = tri_matmul(lead, x[:k0])
        for start, col in zip(self._starts[1:], self._blocks[1:]):
            q = col.shape[1]
            out[: start + q] += col @ x[start : start + q]
        return out

    def rmatmul_t(self, x: np.ndarray) -> np.ndarray:
        """Return ``F.T @ x``."""
        if x.ndim != 2 or x.shape[0] != self.order:
            raise ShapeError(f"cannot multiply ({self.order}, {self.order}).T by {x.shape}")
        out = np.empty((self.order, x.shape[1]))
        lead = self._blocks[0]
        k0 = lead.shape[0]
        out[:k0] = tri_matmul(lead, x[:k0], trans=True)
        for start, col in zip(self._starts[1:], self._blocks[1:]):
            q = col.shape[1]
            out[start : start + q] = col.T @ x[: start + q]
        return out

    def to_dense(self) -> np.ndarray:
        f = np.zeros((self.order, self.order), order="F")
        k0 = self._blocks[0].shape[0]
        f[:k0, :k0] = self._blocks[0]
        for start, col in zip(self._starts[1:], self._blocks[1:]):
            f[: col.shape[0], start : start + col.shape[1]] = col
        return f

    def copy(self) -> "BlockUpperFactor":
        new = BlockUpperFactor.__new__(BlockUpperFactor)
        new._blocks = list(self._blocks)
        new._starts = list(self._starts)
        new.order = self.order
        return new
