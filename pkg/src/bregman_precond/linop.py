"""Matrix-free symmetric linear operators, dense symmetric storage and SPD
factorization utilities.

Every matrix in the package interacts with the algorithms through either a
:class:`LinearOperator` (products only, with exact product accounting) or a
:class:`FactoredSpd` (products and solves through a factor Q with A = QQ^T).
"""

import threading

import numpy as np

from ._backend import cholesky_lower, jacobi_eigh, solve_triangular
from .errors import DimensionMismatch, EigNoConvergence, NotPositiveDefinite

__all__ = [
    "LinearOperator",
    "DenseSym",
    "FactoredSpd",
    "matvec",
    "cholesky_factor",
    "dense_eig_sym",
]


class LinearOperator:
    """Symmetric (by default) linear operator of dimension ``dim``.

    Parameters
    ----------
    dim : int
        Dimension of the (square) operator.
    apply : callable
        Maps a vector of length ``dim`` to a vector of length ``dim``.
    flavor : str
        One of ``dense``, ``diagonal``, ``composed``, ``callback``.
    symmetric : bool
        Whether <Ax, y> = <x, Ay> is promised.

    Notes
    -----
    Each product is counted; the counter increment is guarded by a lock so
    concurrent read-only use keeps the accounting exact.
    """

    def __init__(self, dim, apply, flavor="callback", symmetric=True, matrix=None):
        if dim <= 0:
            raise ValueError(f"dim must be positive, got {dim}")
        self.dim = int(dim)
        self._apply = apply
        self.flavor = flavor
        self.symmetric = symmetric
        self._matrix = matrix
        self._lock = threading.Lock()
        self._products = 0

    @property
    def product_count(self):
        return self._products

    def reset_product_count(self):
        with self._lock:
            self._products = 0

    def _count(self, k):
        with self._lock:
            self._products += k

    def matvec(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise DimensionMismatch((self.dim,), x.shape)
        self._count(1)
        return np.asarray(self._apply(x), dtype=float)

    __call__ = matvec

    def matmat(self, X):
        """Apply to each column of ``X``; counts one product per column."""
        X = np.asarray(X, dtype=float)
        if X.shape[0] != self.dim:
            raise DimensionMismatch(self.dim, X.shape[0])
        k = X.shape[1]
        self._count(k)
        if self._matrix is not None:
            return self._matrix @ X
        out = np.empty_like(X)
        for j in range(k):
            out[:, j] = self._apply(X[:, j])
        return out

    def to_dense(self):
        """Materialize the operator (counts ``dim`` products unless dense)."""
        if self._matrix is not None:
            return self._matrix.copy()
        return self.matmat(np.eye(self.dim))

    def compose(self, other):
        """Return the operator x -> self(other(x))."""
        if other.dim != self.dim:
            raise DimensionMismatch(self.dim, other.dim)

        def apply(x):
            return self.matvec(other.matvec(x))

        return LinearOperator(self.dim, apply, flavor="composed", symmetric=False)

    __matmul__ = compose

    @classmethod
    def identity(cls, dim):
        return cls(dim, lambda x: x.copy(), flavor="diagonal")

    @classmethod
    def diagonal(cls, diag):
        d = np.asarray(diag, dtype=float)
        return cls(d.size, lambda x: d * x, flavor="diagonal")

    @classmethod
    def from_dense(cls, matrix, symmetric=True):
        m = np.asarray(matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {m.shape}")
        return cls(m.shape[0], lambda x: m @ x, flavor="dense", symmetric=symmetric, matrix=m)


class DenseSym:
    """Dense symmetric matrix; storage is symmetrized on construction."""

    def __init__(self, entries):
        a = np.array(entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {a.shape}")
        self.entries = 0.5 * (a + a.T)
        self.dim = a.shape[0]

    def as_operator(self):
        return LinearOperator.from_dense(self.entries)

    def __array__(self, dtype=None, copy=None):
        if dtype is not None:
            return self.entries.astype(dtype)
        return self.entries


class FactoredSpd:
    """SPD matrix A = QQ^T held through its factor Q.

    The four callables apply Q, Q^T, Q^{-1} and Q^{-T}.  ``apply`` and
    ``solve`` give the action of A and A^{-1}.
    """

    def __init__(self, dim, factor_apply, factor_adjoint_apply, factor_solve, factor_adjoint_solve):
        self.dim = int(dim)
        self.factor_apply = factor_apply
        self.factor_adjoint_apply = factor_adjoint_apply
        self.factor_solve = factor_solve
        self.factor_adjoint_solve = factor_adjoint_solve

    def apply(self, x):
        """A x = Q (Q^T x)."""
        return self.factor_apply(self.factor_adjoint_apply(x))

    def solve(self, x):
        """A^{-1} x = Q^{-T} (Q^{-1} x)."""
        return self.factor_adjoint_solve(self.factor_solve(x))

    def as_operator(self):
        return LinearOperator(self.dim, self.apply, flavor="composed")


def matvec(op, x):
    """Apply ``op`` to ``x`` (and count the product)."""
    return op.matvec(x)


def chol_lower(a):
    """Lower Cholesky factor of a dense symmetric array.

    Raises NotPositiveDefinite with the offending pivot index on failure.
    """
    work = np.array(a, dtype=float, order="C")
    bad = cholesky_lower(work)
    if bad >= 0:
        raise NotPositiveDefinite(bad)
    return work


def tri_solve(l, b, transpose=False):
    """Solve L x = b or L^T x = b for lower-triangular L; b may be a matrix."""
    vec = b.ndim == 1
    work = np.array(b, dtype=float, order="C")
    if vec:
        work = work.reshape(-1, 1)
    solve_triangular(l, work, transpose)
    return work[:, 0] if vec else work


def cholesky_factor(a):
    """Cholesky-factor an SPD :class:`DenseSym` into a :class:`FactoredSpd`.

    Solves are carried out by unblocked forward/back substitution.
    """
    if isinstance(a, DenseSym):
        a = a.entries
    l = chol_lower(a)
    lt = np.ascontiguousarray(l)

    factored = FactoredSpd(
        l.shape[0],
        factor_apply=lambda x: lt @ x,
        factor_adjoint_apply=lambda x: lt.T @ x,
        factor_solve=lambda x: tri_solve(lt, x, transpose=False),
        factor_adjoint_solve=lambda x: tri_solve(lt, x, transpose=True),
    )
    factored.lower = lt
    return factored


_JACOBI_MAX_SWEEPS = 60
_JACOBI_TOL = 1e-14


def dense_eig_sym(a, max_sweeps=_JACOBI_MAX_SWEEPS):
    """Full symmetric eigendecomposition by cyclic Jacobi rotations.

    Returns (eigenvalues descending, eigenvector columns).  Ties keep the
    stable order of the underlying sweep.
    """
    if isinstance(a, DenseSym):
        a = a.entries
    work = np.array(a, dtype=float, order="C")
    n = work.shape[0]
    v = np.eye(n)
    sweeps = jacobi_eigh(work, v, max_sweeps, _JACOBI_TOL)
    if sweeps < 0:
        raise EigNoConvergence(f"Jacobi did not converge in {max_sweeps} sweeps")
    w = np.diag(work).copy()
    order = np.argsort(-w, kind="stable")
    return w[order], v[:, order]
