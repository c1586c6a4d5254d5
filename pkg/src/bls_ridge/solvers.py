"""Incremental solvers for the ridge output weights ``W = (A^T A + lam I)^-1 A^T Y``.

Every solver keeps the growing expanded input ``A`` (``l x k``) and the
weights ``W`` (``k x c``).  ``fit`` initializes from a full ``A``; ``update``
appends ``q`` new columns ``H`` and refreshes ``W`` without re-solving from
scratch.

=============  ==================================================  =========
registry name  class                                               λ role
=============  ==================================================  =========
chol           :class:`CholSolver` (stable inner matrix)           ridge λ
chol-plain     :class:`CholSolver` with ``stable=False``           ridge λ
ridge-inv      :class:`RidgeInverseSolver`                         ridge λ
gen-chol       :class:`GenCholSolver` (baseline)                   λ_eps
gen-inv        :class:`GrevilleSolver` (baseline)                  λ_eps
standard       :class:`StandardSolver` (full re-solve)             ridge λ
=============  ==================================================  =========

Solvers mutate themselves under exclusive access.  The functional aliases
(``init_chol``, ``update_chol_stable`` ...) return the same object they were
given so they can be chained.
"""

from __future__ import annotations

import numpy as np

from .linalg import (
    BlockUpperFactor,
    NotPositiveDefiniteError,
    ShapeError,
    as_matrix,
    gram_plus_lambda,
    inverse_cholesky,
    spd_solve,
    symmetrize,
    tri_matmul,
)

__all__ = [
    "DEFAULT_LAMBDA_EPS",
    "ZERO_BRANCH_RTOL",
    "SolverError",
    "LambdaTooSmallError",
    "ColumnBuffer",
    "IncrementalSolver",
    "CholSolver",
    "GenCholSolver",
    "RidgeInverseSolver",
    "GrevilleSolver",
    "StandardSolver",
    "SOLVERS",
    "make_solver",
    "standard_ridge",
    "init_chol",
    "update_chol_plain",
    "update_chol_stable",
    "init_ridge_inverse",
    "update_ridge_inverse",
    "update_ridge_inverse_alt_b",
    "init_geninv",
    "update_geninv",
    "init_genchol",
    "update_genchol",
]

#: Stand-in for the vanishing regularizer of the generalized-inverse baselines.
DEFAULT_LAMBDA_EPS = 1e-8

#: ``C`` is treated as the zero matrix when ``max|C| <= ZERO_BRANCH_RTOL * (1 + max|H|)``.
ZERO_BRANCH_RTOL = 1e-10

# Column chunk for the in-place ridge-inverse update; bounds the k x chunk temporary.
_CHUNK = 2048


class SolverError(RuntimeError):
    """A solver reached a state that should be impossible for valid input."""


class LambdaTooSmallError(NotPositiveDefiniteError):
    """The plain inverse-Cholesky update lost positive definiteness."""

    def __init__(self, pivot: int, value: float):
        super().__init__(
            pivot, value, "λ too small for plain update; use stable variant"
        )


def _check_lambda(lam: float) -> float:
    lam = float(lam)
    if not (lam > 0 and np.isfinite(lam)):
        raise ValueError(f"ridge parameter must be a positive finite number, got {lam!r}")
    return lam


class ColumnBuffer:
    """Column-major ``l x k`` matrix with spare capacity for appended columns.

    Parameters
    ----------
    rows : int
        Number of rows ``l``.
    capacity : int
        Columns to reserve up front.  Appending past it reallocates.
    """

    def __init__(self, rows: int, capacity: int = 0):
        self._data = np.empty((rows, max(int(capacity), 1)), order="F")
        self.cols = 0

    @classmethod
    def from_array(cls, a: np.ndarray, capacity: int | None = None) -> "ColumnBuffer":
        a = as_matrix(a, "A")
        buf = cls.__new__(cls)
        k = a.shape[1]
        if (capacity is None or capacity <= k) and a.flags.f_contiguous and a.dtype == np.float64:
            buf._data = a  # adopt without copying
        else:
            buf._data = np.empty((a.shape[0], max(capacity or k, k, 1)), order="F")
            buf._data[:, :k] = a
        buf.cols = k
        return buf

    @property
    def rows(self) -> int:
        return self._data.shape[0]

    @property
    def capacity(self) -> int:
        return self._data.shape[1]

    @property
    def view(self) -> np.ndarray:
        return self._data[:, : self.cols]

    def reserve(self, capacity: int) -> None:
        if capacity > self.capacity:
            new = np.empty((self.rows, capacity), order="F")
            new[:, : self.cols] = self.view
            self._data = new

    def extend(self, q: int) -> np.ndarray:
        """Grow by ``q`` uninitialized columns and return them as a writable view."""
        need = self.cols + q
        if need > self.capacity:
            self.reserve(max(need, int(1.5 * self.capacity)))
        out = self._data[:, self.cols : need]
        self.cols = need
        return out

    def append(self, h: np.ndarray) -> None:
        if h.shape[0] != self.rows:
            raise ShapeError(f"cannot append {h.shape} columns to a {self.rows}-row matrix")
        self.extend(h.shape[1])[...] = h


class _RowBuffer:
    """Row-major ``k x l`` matrix with spare capacity for appended rows."""

    def __init__(self, a: np.ndarray, capacity: int | None):
        k = a.shape[0]
        self._data = np.empty((max(capacity or k, k, 1), a.shape[1]))
        self._data[:k] = a
        self.rows = k

    @property
    def view(self) -> np.ndarray:
        return self._data[: self.rows]

    def append(self, b: np.ndarray) -> None:
        need = self.rows + b.shape[0]
        if need > self._data.shape[0]:
            new = np.empty((max(need, int(1.5 * self._data.shape[0])), self._data.shape[1]))
            new[: self.rows] = self.view
            self._data = new
        self._data[self.rows : need] = b
        self.rows = need


class IncrementalSolver:
    """Common bookkeeping for the growing system ``Y ~ A W``.

    Parameters
    ----------
    lam : float
        Positive regularizer used for every solve.
    keep_pieces : bool, default False
        Keep the transient block quantities of the last update in
        :attr:`pieces` (useful for diagnostics and tests).
    """

    name = "abstract"

    def __init__(self, lam: float, *, keep_pieces: bool = False):
        self.lam = _check_lambda(lam)
        self.keep_pieces = keep_pieces
        self.pieces: dict[str, np.ndarray] = {}
        self._A: ColumnBuffer | None = None
        self._Y: np.ndarray | None = None
        self.W: np.ndarray | None = None

    # -- accessors -------------------------------------------------------
    @property
    def A(self) -> np.ndarray:
        self._require_fit()
        return self._A.view

    @property
    def Y(self) -> np.ndarray:
        self._require_fit()
        return self._Y

    @property
    def k(self) -> int:
        return 0 if self._A is None else self._A.cols

    @property
    def l(self) -> int:
        return 0 if self._A is None else self._A.rows

    def _require_fit(self) -> None:
        if self._A is None:
            raise SolverError(f"{self.name} solver has not been fitted")

    # -- public API ------------------------------------------------------
    def fit(self, A, Y, capacity: int | None = None) -> "IncrementalSolver":
        """Initialize from the full expanded input ``A`` and targets ``Y``.

        ``A`` may be a :class:`ColumnBuffer`, which is adopted as storage.
        """
        if isinstance(A, ColumnBuffer):
            buf = A
            if capacity:
                buf.reserve(capacity)
        else:
            buf = ColumnBuffer.from_array(A, capacity)
        Y = as_matrix(Y, "Y")
        if Y.shape[0] != buf.rows:
            raise ShapeError(f"A has {buf.rows} rows but Y has shape {Y.shape}")
        self._A = buf
        self._Y = Y
        self._init(buf.view, Y)
        return self

    def update(self, H, Y=None) -> "IncrementalSolver":
        """Append the columns ``H`` to ``A`` and update ``W``."""
        self._require_fit()
        H = as_matrix(H, "H")
        if H.shape[0] != self.l:
            raise ShapeError(f"H has shape {H.shape} but A has {self.l} rows")
        if Y is not None:
            Y = as_matrix(Y, "Y")
            if Y.shape != self._Y.shape:
                raise ShapeError(f"Y has shape {Y.shape}, expected {self._Y.shape}")
            self._Y = Y
        if H.shape[1] == 0:
            return self
        self._update(H, self._Y)
        self._A.append(H)
        return self

    def predict(self, A: np.ndarray) -> np.ndarray:
        self._require_fit()
        if A.shape[1] != self.k:
            raise ShapeError(f"cannot multiply {A.shape} by {self.W.shape}")
        return A @ self.W

    def objective(self) -> float:
        """Ridge training objective ``||A W - Y||^2 + lam ||W||^2``."""
        r = self.A @ self.W - self._Y
        return float(np.sum(r * r) + self.lam * np.sum(self.W * self.W))

    def _keep(self, **pieces) -> None:
        if self.keep_pieces:
            self.pieces = pieces

    # -- subclass hooks --------------------------------------------------
    def _init(self, A: np.ndarray, Y: np.ndarray) -> None:
        raise NotImplementedError

    def _update(self, H: np.ndarray, Y: np.ndarray) -> None:
        raise NotImplementedError


class CholSolver(IncrementalSolver):
    """Ridge solver that grows the upper inverse Cholesky factor ``F``.

    ``F F^T = (A^T A + lam I)^-1``.  Appending ``H`` extends ``F`` to
    ``[[F, T], [0, G]]``.

    Parameters
    ----------
    lam : float
        Ridge parameter.
    stable : bool, default True
        Build the inner matrix as ``C^T C + lam D^T D + lam I``, which is
        positive definite by construction.  With ``False`` the cheaper form
        ``H^T H + lam I - P^T P`` is used, which can lose definiteness for
        tiny ``lam`` and then raises :class:`LambdaTooSmallError`.
    """

    name = "chol"

    def __init__(self, lam: float, stable: bool = True, *, keep_pieces: bool = False):
        super().__init__(lam, keep_pieces=keep_pieces)
        self.stable = stable
        self.name = "chol" if stable else "chol-plain"
        self._F: BlockUpperFactor | None = None

    @property
    def F(self) -> np.ndarray:
        """Dense copy of the current inverse Cholesky factor."""
        self._require_fit()
        return self._F.to_dense()

    @property
    def factor(self) -> BlockUpperFactor:
        self._require_fit()
        return self._F

    def _init(self, A, Y):
        R = gram_plus_lambda(A, self.lam)
        try:
            F = inverse_cholesky(R)
        except NotPositiveDefiniteError as exc:
            raise SolverError(
                f"A^T A + {self.lam:g} I failed to factorize ({exc}); "
                "the expanded input is too badly scaled for this λ"
            ) from exc
        self._F = BlockUpperFactor(F)
        self.W = self._F.matmul(self._F.rmatmul_t(A.T @ Y))

    def _inner(self, C: np.ndarray, D: np.ndarray) -> np.ndarray:
        S = C.T @ C
        S += self.lam * (D.T @ D)
        S[np.diag_indices_from(S)] += self.lam
        return symmetrize(S)

    def _update(self, H, Y):
        if self.stable:
            self._update_stable(H, Y)
        else:
            self._update_plain(H, Y)

    def _update_plain(self, H, Y):
        A, F = self._A.view, self._F
        AtH = A.T @ H
        P = F.rmatmul_t(AtH)
        S = H.T @ H
        S -= P.T @ P
        S[np.diag_indices_from(S)] += self.lam
        symmetrize(S)
        try:
            G = inverse_cholesky(S)
        except NotPositiveDefiniteError as exc:
            raise LambdaTooSmallError(exc.pivot, exc.value) from exc
        T = -F.matmul(tri_matmul(G, P, right=True))
        r = H.T @ Y - AtH.T @ self.W
        u = tri_matmul(G, r, trans=True)
        self.W = np.vstack([self.W + T @ u, tri_matmul(G, u)])
        F.append(T, G)
        self._keep(P=P, G=G, T=T)

    def _update_stable(self, H, Y):
        A, F = self._A.view, self._F
        D = F.matmul(F.rmatmul_t(A.T @ H))
        C = H - A @ D
        S = self._inner(C, D)
        try:
            G = inverse_cholesky(S)
        except NotPositiveDefiniteError as exc:
            raise SolverError(f"inner matrix lost definiteness ({exc})") from exc
        T = -tri_matmul(G, D, right=True)
        u = tri_matmul(G, C.T @ Y, trans=True)
        self.W = np.vstack([self.W + T @ u, tri_matmul(G, u)])
        F.append(T, G)
        self._keep(D=D, C=C, G=G, T=T)


class GenCholSolver(CholSolver):
    """Factorized generalized-inverse baseline.

    Identical to the stable :class:`CholSolver` except that the inner
    matrix omits the ``lam D^T D`` term, i.e. ``C^T C + lam_eps I``, which
    is what the ``lam -> 0`` limit of the ridge recursion gives.
    """

    name = "gen-chol"

    def __init__(self, lam_eps: float = DEFAULT_LAMBDA_EPS, *, keep_pieces: bool = False):
        super().__init__(lam_eps, stable=True, keep_pieces=keep_pieces)
        self.name = "gen-chol"

    @property
    def lam_eps(self) -> float:
        return self.lam

    def _inner(self, C, D):
        S = C.T @ C
        S[np.diag_indices_from(S)] += self.lam
        return symmetrize(S)


class RidgeInverseSolver(IncrementalSolver):
    """Ridge solver that grows the explicit ridge inverse ``(A^T A + lam I)^-1 A^T``.

    Stores ``Adag`` as a ``k x l`` row-major matrix; each update subtracts
    ``D B^T`` in place and appends ``B^T`` as new rows.
    """

    name = "ridge-inv"

    def __init__(self, lam: float, *, keep_pieces: bool = False):
        super().__init__(lam, keep_pieces=keep_pieces)
        self._P: _RowBuffer | None = None

    @property
    def Adag(self) -> np.ndarray:
        self._require_fit()
        return self._P.view

    def _init(self, A, Y):
        R = gram_plus_lambda(A, self.lam)
        try:
            Adag = spd_solve(R, np.ascontiguousarray(A.T))
        except NotPositiveDefiniteError as exc:
            raise SolverError(f"A^T A + {self.lam:g} I failed to factorize ({exc})") from exc
        cap = self._A.capacity
        self._P = _RowBuffer(Adag, cap)
        self.W = Adag @ Y

    def _pieces(self, H):
        A, Adag = self._A.view, self._P.view
        D = Adag @ H
        C = H - A @ D
        return D, C

    def _bt(self, H, D, C) -> np.ndarray:
        S = C.T @ C
        S += self.lam * (D.T @ D)
        S[np.diag_indices_from(S)] += self.lam
        symmetrize(S)
        try:
            return spd_solve(S, np.ascontiguousarray(C.T))
        except NotPositiveDefiniteError as exc:
            raise SolverError(f"inner matrix lost definiteness ({exc})") from exc

    def _update(self, H, Y):
        D, C = self._pieces(H)
        Bt = self._bt(H, D, C)
        Adag = self._P.view
        for j in range(0, Adag.shape[1], _CHUNK):
            Adag[:, j : j + _CHUNK] -= D @ Bt[:, j : j + _CHUNK]
        BtY = Bt @ Y
        self.W = np.vstack([self.W - D @ BtY, BtY])
        self._P.append(Bt)
        self._keep(D=D, C=C, Bt=Bt)


class GrevilleSolver(RidgeInverseSolver):
    """Explicit generalized-inverse baseline following Greville's recursion.

    ``A+`` is approximated by the ridge inverse at ``lam_eps``.  For each
    appended block, ``C = H - A A+ H`` selects the branch:

    * ``C != 0``: ``B^T = (C^T C + lam_eps I)^-1 C^T``
    * ``C == 0``: ``B^T = (I + D^T D)^-1 D^T A+``

    The branch taken is recorded in :attr:`last_branch`.
    """

    name = "gen-inv"

    def __init__(self, lam_eps: float = DEFAULT_LAMBDA_EPS, *, keep_pieces: bool = False):
        super().__init__(lam_eps, keep_pieces=keep_pieces)
        self.last_branch: str | None = None

    @property
    def lam_eps(self) -> float:
        return self.lam

    def _bt(self, H, D, C):
        if np.max(np.abs(C), initial=0.0) <= ZERO_BRANCH_RTOL * (1.0 + np.max(np.abs(H), initial=0.0)):
            self.last_branch = "zero"
            S = D.T @ D
            S[np.diag_indices_from(S)] += 1.0
            return spd_solve(symmetrize(S), D.T @ self._P.view)
        self.last_branch = "nonzero"
        S = C.T @ C
        S[np.diag_indices_from(S)] += self.lam
        return spd_solve(symmetrize(S), np.ascontiguousarray(C.T))


class StandardSolver(IncrementalSolver):
    """Re-solves ``(A^T A + lam I) W = A^T Y`` from scratch after every update."""

    name = "standard"

    def _init(self, A, Y):
        self.W = standard_ridge(A, Y, self.lam)

    def _update(self, H, Y):
        A = np.hstack([self._A.view, H])
        self.W = standard_ridge(A, Y, self.lam)


def standard_ridge(A, Y, lam: float) -> np.ndarray:
    """Ridge weights from one positive-definite solve.

    Parameters
    ----------
    A : ndarray, shape (l, k)
    Y : ndarray, shape (l, c)
    lam : float
        Positive regularizer.

    Returns
    -------
    W : ndarray, shape (k, c)
    """
    A = as_matrix(A, "A")
    Y = as_matrix(Y, "Y")
    if A.shape[0] != Y.shape[0]:
        raise ShapeError(f"A has shape {A.shape} but Y has shape {Y.shape}")
    R = gram_plus_lambda(A, _check_lambda(lam))
    return spd_solve(R, A.T @ Y)


SOLVERS = {
    "chol": lambda lam, **kw: CholSolver(lam, stable=True, **kw),
    "chol-plain": lambda lam, **kw: CholSolver(lam, stable=False, **kw),
    "ridge-inv": RidgeInverseSolver,
    "gen-chol": GenCholSolver,
    "gen-inv": GrevilleSolver,
    "standard": StandardSolver,
}


def make_solver(name: str, lam: float, **kwargs) -> IncrementalSolver:
    """Construct a solver by registry name.  Baselines take ``lam`` as ``lam_eps``."""
    try:
        factory = SOLVERS[name]
    except KeyError:
        raise ValueError(f"unknown solver {name!r}; choose from {sorted(SOLVERS)}") from None
    return factory(lam, **kwargs)


# -- functional aliases ---------------------------------------------------

def init_chol(A, Y, lam: float, *, capacity: int | None = None) -> CholSolver:
    return CholSolver(lam).fit(A, Y, capacity)


def update_chol_plain(state: CholSolver, H, Y=None) -> CholSolver:
    state._require_fit()
    stable, state.stable = state.stable, False
    try:
        return state.update(H, Y)
    finally:
        state.stable = stable


def update_chol_stable(state: CholSolver, H, Y=None) -> CholSolver:
    state._require_fit()
    stable, state.stable = state.stable, True
    try:
        return state.update(H, Y)
    finally:
        state.stable = stable


def init_ridge_inverse(A, Y, lam: float, *, capacity: int | None = None) -> RidgeInverseSolver:
    return RidgeInverseSolver(lam).fit(A, Y, capacity)


def update_ridge_inverse(state: RidgeInverseSolver, H, Y=None) -> RidgeInverseSolver:
    return state.update(H, Y)


def update_ridge_inverse_alt_b(state: RidgeInverseSolver, H) -> np.ndarray:
    """``B^T`` from the cheaper inner matrix ``H^T C + lam I``.

    Mathematically equal to the stable form since ``H^T C = C^T C + lam D^T D``,
    but rounding can make it indefinite for tiny ``lam``; that raises
    :class:`~bls_ridge.linalg.NotPositiveDefiniteError`.  ``state`` is not modified.
    """
    state._require_fit()
    H = as_matrix(H, "H")
    if H.shape[0] != state.l:
        raise ShapeError(f"H has shape {H.shape} but A has {state.l} rows")
    _, C = state._pieces(H)
    S = H.T @ C
    S[np.diag_indices_from(S)] += state.lam
    return spd_solve(symmetrize(S), np.ascontiguousarray(C.T))


def init_geninv(A, Y, lam_eps: float = DEFAULT_LAMBDA_EPS, *, capacity=None) -> GrevilleSolver:
    return GrevilleSolver(lam_eps).fit(A, Y, capacity)


def update_geninv(state: GrevilleSolver, H, Y=None) -> GrevilleSolver:
    return state.update(H, Y)


def init_genchol(A, Y, lam_eps: float = DEFAULT_LAMBDA_EPS, *, capacity=None) -> GenCholSolver:
    return GenCholSolver(lam_eps).fit(A, Y, capacity)


def update_genchol(state: GenCholSolver, H, Y=None) -> GenCholSolver:
    return state.update(H, Y)
