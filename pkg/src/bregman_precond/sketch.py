"""Low-rank symmetric PSD approximation: deterministic truncated EVD,
randomized EVD with optional power iteration, Nystrom approximation and a
single-pass variant.

All randomness flows through a counter-based Philox generator keyed by
(seed, stream), so every sketch is reproducible bit-for-bit and per-trial
streams are independent.
"""

from dataclasses import dataclass

import numpy as np

from .errors import (
    IllConditionedCore,
    IndefiniteInput,
    RankDeficientSketch,
    ZeroSketch,
)
from .linop import DenseSym, LinearOperator, dense_eig_sym

__all__ = [
    "LowRankEig",
    "SketchConfig",
    "truncated_evd",
    "gaussian_test_matrix",
    "range_finder",
    "randomized_evd",
    "nystrom",
    "single_pass_evd",
]

# relative singular-value cutoff for numerical rank decisions
PINV_RTOL = 1e-12
# eigenvalues in (-CLAMP_RTOL * max, 0) are treated as roundoff and clamped
CLAMP_RTOL = 1e-10


@dataclass
class LowRankEig:
    """Rank-r symmetric PSD approximation U diag(values) U^T.

    ``basis`` is n-by-r with orthonormal columns, ``values`` descending and
    nonnegative.
    """

    dim: int
    rank: int
    basis: np.ndarray
    values: np.ndarray
    clamped: int = 0

    def as_matrix(self):
        return (self.basis * self.values) @ self.basis.T

    def scaled_factor(self):
        """F with F F^T = U diag(values) U^T."""
        return self.basis * np.sqrt(self.values)

    @classmethod
    def zero(cls, dim, rank):
        u = np.zeros((dim, rank))
        u[np.arange(min(rank, dim)), np.arange(min(rank, dim))] = 1.0
        return cls(dim=dim, rank=rank, basis=u, values=np.zeros(rank))


@dataclass
class SketchConfig:
    """Sketch-quality knobs: target rank, oversampling, power passes, seed."""

    rank: int
    oversample: int = 0
    power: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.rank < 1:
            raise ValueError(f"rank must be >= 1, got {self.rank}")
        if self.oversample < 0 or self.power < 0:
            raise ValueError("oversample and power must be >= 0")


def make_rng(seed, stream=0):
    """Philox generator for (seed, stream); streams are independent."""
    return np.random.Generator(np.random.Philox(key=[seed % 2**64, stream % 2**64]))


def _as_operator(g):
    if isinstance(g, LinearOperator):
        return g
    if isinstance(g, DenseSym):
        return g.as_operator()
    return LinearOperator.from_dense(np.asarray(g, dtype=float))


def _to_dense(g):
    if isinstance(g, LinearOperator):
        return g.to_dense()
    if isinstance(g, DenseSym):
        return g.entries
    return np.asarray(g, dtype=float)


def truncated_evd(g, r):
    """Top-r eigenpairs of a symmetric PSD matrix (Eckart-Young optimal).

    Raises IndefiniteInput if an eigenvalue falls below -1e-10 * lambda_1.
    """
    a = _to_dense(g)
    n = a.shape[0]
    if r > n:
        raise ValueError(f"rank {r} exceeds dimension {n}")
    w, v = dense_eig_sym(a)
    top = w[0] if w.size else 0.0
    if w.size and w[-1] < -CLAMP_RTOL * max(top, 1e-300):
        raise IndefiniteInput(f"smallest eigenvalue {w[-1]:.3e} is significantly negative")
    w = np.clip(w, 0.0, None)
    return LowRankEig(dim=n, rank=r, basis=v[:, :r].copy(), values=w[:r].copy())


def gaussian_test_matrix(n, k, seed, stream=0):
    """n-by-k i.i.d. standard normal test matrix from the (seed, stream) rng."""
    if k > n:
        raise ValueError(f"requested {k} columns for dimension {n}")
    return make_rng(seed, stream).standard_normal((n, k))


def _qr_checked(y):
    theta, r = np.linalg.qr(y)
    d = np.abs(np.diag(r))
    if d.size and d.min() < 1e-14 * max(d.max(), 1e-300):
        raise RankDeficientSketch(
            f"sketch lost rank: min |R_ii| = {d.min():.3e}, max = {d.max():.3e}"
        )
    return theta


def range_finder(g, k, q=0, seed=0, stream=0, omega=None):
    """Orthonormal basis of the (power-iterated) sketch range.

    Computes Theta from a QR decomposition of G^(2q+1) Omega; consumes
    exactly (2q+1)*k products with G.
    """
    op = _as_operator(g)
    if omega is None:
        omega = gaussian_test_matrix(op.dim, k, seed, stream)
    y = op.matmat(omega)
    for _ in range(2 * q):
        y = op.matmat(y)
    return _qr_checked(y)


def randomized_evd(g, cfg, stream=0):
    """Randomized truncated eigendecomposition of a symmetric PSD operator.

    Sketch with r+p Gaussian columns (optionally power-iterated), project,
    eigendecompose the small core and truncate to rank r.
    """
    op = _as_operator(g)
    k = cfg.rank + cfg.oversample
    if k > op.dim:
        raise ValueError(f"rank + oversample = {k} exceeds dimension {op.dim}")
    omega = gaussian_test_matrix(op.dim, k, cfg.seed, stream)
    y = op.matmat(omega)
    if not np.any(y):
        return LowRankEig.zero(op.dim, cfg.rank)
    for _ in range(2 * cfg.power):
        y = op.matmat(y)
    # tolerate an exactly low-rank sketch by shrinking the basis to the
    # numerical rank of Y; the projected core then recovers G exactly
    theta, sv, _ = np.linalg.svd(y, full_matrices=False)
    keep = sv > 1e-14 * sv[0]
    theta = theta[:, keep]
    c = theta.T @ op.matmat(theta)
    c = 0.5 * (c + c.T)
    w, u_small = dense_eig_sym(c)
    top = max(w[0], 1e-300)
    if w[-1] < -CLAMP_RTOL * top:
        raise IndefiniteInput(f"projected core has eigenvalue {w[-1]:.3e} < 0")
    clamped = int(np.count_nonzero(w < 0.0))
    w = np.clip(w, 0.0, None)
    r = cfg.rank
    m = min(r, theta.shape[1])
    basis = np.zeros((op.dim, r))
    values = np.zeros(r)
    basis[:, :m] = theta @ u_small[:, :m]
    values[:m] = w[:m]
    if m < r:
        basis[:, m:] = _orthonormal_completion(basis[:, :m], r - m, op.dim)
    return LowRankEig(
        dim=op.dim,
        rank=r,
        basis=basis,
        values=values,
        clamped=clamped,
    )


def _eig_form(y, core, r, dim):
    """Eigen-form of Y core^+ Y^T truncated to rank r."""
    w, v = dense_eig_sym(0.5 * (core + core.T))
    cutoff = PINV_RTOL * max(abs(w[0]) if w.size else 0.0, 1e-300)
    keep = w > cutoff
    f = y @ (v[:, keep] / np.sqrt(w[keep]))
    # thin factorization of F F^T through the small Gram matrix
    gram = f.T @ f
    wg, vg = dense_eig_sym(gram)
    wg = np.clip(wg, 0.0, None)
    pos = wg > PINV_RTOL * max(wg[0] if wg.size else 0.0, 1e-300)
    u = np.zeros((dim, r))
    vals = np.zeros(r)
    m = min(r, int(np.count_nonzero(pos)))
    if m > 0:
        u[:, :m] = f @ (vg[:, :m] / np.sqrt(wg[:m]))
        vals[:m] = wg[:m]
    if m < r:
        # pad the basis to full width with an orthonormal completion
        u[:, m:r] = _orthonormal_completion(u[:, :m], r - m, dim)
    return LowRankEig(dim=dim, rank=r, basis=u, values=vals)


def _orthonormal_completion(u, extra, dim):
    rng = make_rng(0x6E79737472, dim)
    cand = rng.standard_normal((dim, extra))
    cand -= u @ (u.T @ cand)
    q, _ = np.linalg.qr(cand)
    return q


def nystrom(g, cfg, range_mode="raw", stream=0, omega=None):
    """Nystrom approximation (G Omega)(Omega^T G Omega)^+(G Omega)^T.

    ``range_mode='qr_of_GΩ'`` substitutes an orthonormal basis of range(G
    Omega) for Omega, at the cost of one extra pass over G.  The residual
    G - Nys(G) is PSD (a Schur complement of a partial LDL^T view).
    """
    op = _as_operator(g)
    k = cfg.rank + cfg.oversample
    if k > op.dim:
        raise ValueError(f"rank + oversample = {k} exceeds dimension {op.dim}")
    if omega is None:
        omega = gaussian_test_matrix(op.dim, k, cfg.seed, stream)
    y = op.matmat(omega)
    if not np.any(y):
        raise ZeroSketch("G Omega is identically zero")
    if range_mode == "qr_of_GΩ" or range_mode == "qr":
        omega = _qr_checked(y)
        y = op.matmat(omega)
    elif range_mode != "raw":
        raise ValueError(f"unknown range_mode {range_mode!r}")
    core = omega.T @ y
    return _eig_form(y, core, cfg.rank, op.dim)


def single_pass_evd(g, r, seed=0, stream=0, omega=None):
    """Single-view randomized EVD: one block of products with G total.

    The small core Pi is solved from Pi (Theta^T Omega) = Theta^T (G Omega)
    and symmetrized; the result coincides with the raw Nystrom approximation
    for the same test matrix.
    """
    op = _as_operator(g)
    if omega is None:
        omega = gaussian_test_matrix(op.dim, r, seed, stream)
    y = op.matmat(omega)
    if not np.any(y):
        raise ZeroSketch("G Omega is identically zero")
    theta = _qr_checked(y)
    t = theta.T @ omega
    sv = np.linalg.svd(t, compute_uv=False)
    if sv[0] / max(sv[-1], 1e-300) > 1e12:
        raise IllConditionedCore(
            f"Theta^T Omega condition estimate {sv[0] / max(sv[-1], 1e-300):.3e}"
        )
    rhs = theta.T @ y
    pi = np.linalg.solve(t.T, rhs.T).T
    pi = 0.5 * (pi + pi.T)
    w, u_small = dense_eig_sym(pi)
    top = max(abs(w[0]) if w.size else 0.0, 1e-300)
    clamped = int(np.count_nonzero(w < 0.0))
    w = np.clip(w, 0.0, None)
    return LowRankEig(
        dim=op.dim,
        rank=r,
        basis=theta @ u_small,
        values=w,
        clamped=clamped,
    )
