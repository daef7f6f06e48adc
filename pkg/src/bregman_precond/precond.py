"""Construction and inverse application of the preconditioners under study:
the scaled low-rank family Q(I + G_r)Q^T, its nonscaled and lifted variants,
and the algebraic baselines (Jacobi, block Jacobi, symmetric Gauss-Seidel,
partial Cholesky).

All low-rank inverses are applied through the Woodbury identity with the
small core factored once at build time, so application is O(products + n r).
"""

import numpy as np

from .errors import DimensionMismatch, NotPositiveDefinite
from .linop import DenseSym, chol_lower, tri_solve

__all__ = [
    "Preconditioner",
    "BlockPartition",
    "identity_precond",
    "build_scaled",
    "build_nonscaled",
    "build_lifted_scaled",
    "build_jacobi",
    "build_block_jacobi",
    "build_sgs",
    "build_partial_cholesky",
]


class Preconditioner:
    """Immutable preconditioner P exposing x -> P^{-1} x plus metadata."""

    def __init__(self, dim, kind, inverse_apply, rank_used=None, build_stats=None):
        self.dim = int(dim)
        self.kind = kind
        self._inverse_apply = inverse_apply
        self.rank_used = rank_used
        self.build_stats = dict(build_stats or {})

    def inverse_apply(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise DimensionMismatch((self.dim,), x.shape)
        return self._inverse_apply(x)

    def inverse_matmat(self, xs):
        out = np.empty_like(np.asarray(xs, dtype=float))
        for j in range(out.shape[1]):
            out[:, j] = self.inverse_apply(xs[:, j])
        return out

    def dense_inverse(self):
        """Materialize P^{-1} (symmetrized)."""
        w = self.inverse_matmat(np.eye(self.dim))
        return 0.5 * (w + w.T)


class BlockPartition:
    """Contiguous block sizes n_1, ..., n_b summing to the dimension."""

    def __init__(self, sizes):
        sizes = [int(s) for s in sizes]
        if any(s <= 0 for s in sizes):
            raise ValueError(f"block sizes must be positive, got {sizes}")
        self.sizes = sizes
        self.offsets = np.concatenate([[0], np.cumsum(sizes)])

    @property
    def total(self):
        return int(self.offsets[-1])


def identity_precond(n):
    return Preconditioner(n, "identity", lambda x: x.copy())


def _require_same_dim(a, b):
    if a != b:
        raise DimensionMismatch(a, b)


def build_scaled(q, gr):
    """Scaled preconditioner Q (I + G_r) Q^T from a factored A and low-rank G_r.

    The inner inverse uses (I + FF^T)^{-1} = I - F (I_r + F^T F)^{-1} F^T with
    F = U Lambda^{1/2} and the r-by-r core Cholesky-factored at build time.
    """
    _require_same_dim(q.dim, gr.dim)
    f = gr.scaled_factor()
    r = f.shape[1]
    if r > 0:
        core_l = chol_lower(np.eye(r) + f.T @ f)

    def inverse_apply(x):
        y = q.factor_solve(x)
        if r > 0:
            t = tri_solve(core_l, f.T @ y)
            y = y - f @ tri_solve(core_l, t, transpose=True)
        return q.factor_adjoint_solve(y)

    return Preconditioner(q.dim, "scaled", inverse_apply, rank_used=r)


def build_nonscaled(q, br):
    """Nonscaled preconditioner A + B_r, applied by Woodbury through A's factor."""
    _require_same_dim(q.dim, br.dim)
    f = br.scaled_factor()
    r = f.shape[1]

    def a_inv(x):
        return q.factor_adjoint_solve(q.factor_solve(x))

    if r > 0:
        ainv_f = np.column_stack([a_inv(f[:, j]) for j in range(r)])
        core_l = chol_lower(np.eye(r) + f.T @ ainv_f)

    def inverse_apply(x):
        ax = a_inv(x)
        if r > 0:
            t = tri_solve(core_l, f.T @ ax)
            ax = ax - ainv_f @ tri_solve(core_l, t, transpose=True)
        return ax

    return Preconditioner(q.dim, "nonscaled", inverse_apply, rank_used=r)


def build_lifted_scaled(q, gr, alpha):
    """Lifted scaled preconditioner Q (I + G_r + alpha (I - UU^T)) Q^T.

    Lifts the non-unit generalized eigenvalues; intended with
    lambda_n(G) <= alpha <= lambda_{r+1}(G).
    """
    _require_same_dim(q.dim, gr.dim)
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    beta = 1.0 + alpha
    shifted = 1.0 + gr.values
    if beta <= 0 or np.any(shifted <= 0):
        raise NotPositiveDefinite(
            int(np.argmax(shifted <= 0)), "lifted inner matrix is not positive definite"
        )
    u = gr.basis

    def inverse_apply(x):
        y = q.factor_solve(x)
        uy = u.T @ y
        y = (y - u @ uy) / beta + u @ (uy / shifted)
        return q.factor_adjoint_solve(y)

    return Preconditioner(q.dim, "lifted_scaled", inverse_apply, rank_used=gr.rank)


def build_jacobi(s):
    """Diagonal (Jacobi) preconditioner."""
    d = np.diag(np.asarray(s, dtype=float)).copy()
    bad = np.nonzero(d <= 0)[0]
    if bad.size:
        raise NotPositiveDefinite(int(bad[0]), f"nonpositive diagonal entry at {bad[0]}")
    inv_d = 1.0 / d
    return Preconditioner(d.size, "jacobi", lambda x: inv_d * x)


def build_block_jacobi(s, part):
    """Block Jacobi preconditioner blkdiag(E_i^T S E_i) for a block partition."""
    a = np.asarray(s, dtype=float)
    if part.total != a.shape[0]:
        raise DimensionMismatch(a.shape[0], part.total)
    factors = []
    for i, (lo, hi) in enumerate(zip(part.offsets[:-1], part.offsets[1:])):
        try:
            factors.append(chol_lower(a[lo:hi, lo:hi]))
        except NotPositiveDefinite as exc:
            raise NotPositiveDefinite(
                exc.pivot_index, f"diagonal block {i} is not positive definite"
            ) from exc

    def inverse_apply(x):
        out = np.empty_like(x)
        for (lo, hi), l in zip(zip(part.offsets[:-1], part.offsets[1:]), factors):
            out[lo:hi] = tri_solve(l, tri_solve(l, x[lo:hi]), transpose=True)
        return out

    return Preconditioner(a.shape[0], "block_jacobi", inverse_apply)


def build_sgs(s):
    """Symmetric Gauss-Seidel preconditioner (D + L) D^{-1} (D + U)."""
    a = np.asarray(s, dtype=float)
    d = np.diag(a).copy()
    bad = np.nonzero(d <= 0)[0]
    if bad.size:
        raise NotPositiveDefinite(int(bad[0]), f"nonpositive diagonal entry at {bad[0]}")
    dl = np.ascontiguousarray(np.tril(a))

    def inverse_apply(x):
        y = tri_solve(dl, x)
        y = d * y
        return tri_solve(dl, y, transpose=True)

    return Preconditioner(a.shape[0], "sgs", inverse_apply)


def build_partial_cholesky(s, r):
    """Partial Cholesky preconditioner with complete diagonal pivoting.

    r steps of pivoted Cholesky give the leading factor columns F; the
    remaining diagonal of the Schur complement closes the preconditioner.
    The pivoting permutation is recorded and applied inside inverse_apply.
    """
    a = np.array(s, dtype=float)
    n = a.shape[0]
    if r > n:
        raise ValueError(f"rank {r} exceeds dimension {n}")
    perm = np.arange(n)
    f = np.zeros((n, r))
    for k in range(r):
        j = k + int(np.argmax(np.diag(a)[k:]))
        if j != k:
            a[[k, j], :] = a[[j, k], :]
            a[:, [k, j]] = a[:, [j, k]]
            perm[[k, j]] = perm[[j, k]]
            f[[k, j], :] = f[[j, k], :]
        piv = a[k, k]
        if piv <= 0:
            raise NotPositiveDefinite(k, f"partial Cholesky breakdown at step {k}")
        f[k, k] = np.sqrt(piv)
        f[k + 1 :, k] = a[k + 1 :, k] / f[k, k]
        a[k + 1 :, k + 1 :] -= np.outer(f[k + 1 :, k], f[k + 1 :, k])
    d_schur = np.diag(a)[r:].copy()
    if np.any(d_schur <= 0):
        bad = r + int(np.argmax(d_schur <= 0))
        raise NotPositiveDefinite(bad, f"nonpositive Schur diagonal at {bad}")
    f11 = np.ascontiguousarray(f[:r, :r])
    f21 = f[r:, :r]

    def inverse_apply(x):
        xp = x[perm]
        z1 = tri_solve(f11, xp[:r]) if r > 0 else xp[:0]
        z2 = (xp[r:] - f21 @ z1) / d_schur
        w1 = tri_solve(f11, z1 - f21.T @ z2, transpose=True) if r > 0 else z1
        out = np.empty_like(x)
        out[perm] = np.concatenate([w1, z2])
        return out

    p = Preconditioner(n, "partial_cholesky", inverse_apply, rank_used=r)
    p.factor = f
    p.schur_diagonal = d_schur
    p.permutation = perm
    return p
