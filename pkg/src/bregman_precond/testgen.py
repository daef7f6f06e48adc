"""Synthetic SPD test problems with controlled spectra, and weak-constraint
4D-VAR heat-equation systems assembled matrix-free.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .linop import DenseSym, FactoredSpd, LinearOperator
from .mmio import write_matrix
from .precond import Preconditioner, build_nonscaled, build_scaled
from .sketch import LowRankEig, SketchConfig, make_rng, nystrom

__all__ = [
    "SpectrumParams",
    "SPECTRUM_LABELS_A",
    "SPECTRUM_LABELS_B",
    "spectrum",
    "SyntheticProblem",
    "assemble_synthetic",
    "FourDVarConfig",
    "FourDVarSystem",
    "assemble_heat_4dvar",
    "build_4dvar_preconditioners",
]


@dataclass
class SpectrumParams:
    """Parameters of the eigenvalue profile exp(-|alpha i/n - c|^beta) + kappa."""

    alpha: float
    c: float
    beta: float
    kappa: float = 0.0

    def __post_init__(self):
        if self.beta < 0 or self.kappa < 0:
            raise ValueError("beta and kappa must be nonnegative")


# label -> params; A profiles carry the floor kappa, B profiles do not
SPECTRUM_LABELS_A = {
    1: SpectrumParams(0.0, 0.0, 0.0, 0.70),
    2: SpectrumParams(3.5, 0.0, 1.0, 0.05),
    3: SpectrumParams(4.0, 0.30, 4.5, 0.05),
    4: SpectrumParams(2.0, 0.25, 4.5, 0.05),
}
SPECTRUM_LABELS_B = {
    1: SpectrumParams(3.0, 0.0, 1.0, 0.0),
    2: SpectrumParams(2.5, 0.55, 4.7, 0.0),
}


def spectrum(params, count, is_a=True):
    """Evaluate the eigenvalue profile for i = 1..count.

    The base is taken as |alpha i/count - c| before raising to beta, and
    0^0 := 1, so the flat profile comes out constant.  Emits a warning when
    the result is not monotone decreasing (possible for c > 0).
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    i = np.arange(1, count + 1, dtype=float)
    base = np.abs(params.alpha * i / count - params.c)
    with np.errstate(divide="ignore"):
        powered = np.where((base == 0.0) & (params.beta == 0.0), 1.0, base**params.beta)
    vals = np.exp(-powered)
    if is_a:
        vals = vals + params.kappa
    if np.any(np.diff(vals) > 1e-15):
        warnings.warn("spectrum is not monotone decreasing", stacklevel=2)
    return vals


@dataclass
class SyntheticProblem:
    """Dense synthetic instance S = A + B with A's symmetric square root."""

    a: DenseSym
    b: DenseSym
    s: DenseSym
    q: FactoredSpd
    sigma_a: np.ndarray
    sigma_b: np.ndarray

    def g_dense(self):
        """G = Q^{-1} B Q^{-T} materialized."""
        cols = np.column_stack(
            [self.q.factor_solve(self.b.entries[:, j]) for j in range(self.b.dim)]
        )
        g = np.column_stack([self.q.factor_solve(row) for row in cols])
        return 0.5 * (g + g.T)


def _sym_sqrt_factor(o, sigma):
    """FactoredSpd for A = O diag(sigma) O^T via its symmetric square root."""
    root = np.sqrt(sigma)
    q = (o * root) @ o.T
    q_inv = (o / root) @ o.T

    return FactoredSpd(
        o.shape[0],
        factor_apply=lambda x: q @ x,
        factor_adjoint_apply=lambda x: q @ x,
        factor_solve=lambda x: q_inv @ x,
        factor_adjoint_solve=lambda x: q_inv @ x,
    )


def assemble_synthetic(pa, pb, n, m, seed=0):
    """Random-basis SPD instance: A = O_A S_A O_A^T (n-by-n),
    B = O_B S_B O_B^T of rank m <= n, bases from seeded Gaussian QR.

    Spectra are sorted descending before placement.
    """
    if m > n:
        raise ValueError(f"m = {m} exceeds n = {n}")
    sigma_a = np.sort(spectrum(pa, n, is_a=True))[::-1]
    sigma_b = np.sort(spectrum(pb, m, is_a=False))[::-1]
    o_a, _ = np.linalg.qr(make_rng(seed, 1).standard_normal((n, n)))
    o_b, _ = np.linalg.qr(make_rng(seed, 2).standard_normal((n, m)))
    a = (o_a * sigma_a) @ o_a.T
    b = (o_b * sigma_b) @ o_b.T
    return SyntheticProblem(
        a=DenseSym(a),
        b=DenseSym(b),
        s=DenseSym(a + b),
        q=_sym_sqrt_factor(o_a, sigma_a),
        sigma_a=sigma_a,
        sigma_b=sigma_b,
    )


@dataclass
class FourDVarConfig:
    """Weak-constraint 4D-VAR heat-equation configuration.

    ``n`` spatial cells, ``steps`` model steps (N; N+1 discrete times),
    ``m`` observed components per time, explicit-Euler steps dt over cells
    of size dx, log-spaced covariance spreads tau_d / tau_r.
    """

    n: int = 100
    steps: int = 20
    m: int = 50
    dt: float = 1e-4
    dx: float = 2e-2
    tau_d: float = 1.0
    tau_r: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.m > self.n:
            raise ValueError(f"m = {self.m} exceeds n = {self.n}")
        if self.heat_ratio > 0.5:
            raise ValueError(
                f"explicit Euler unstable: dt/dx^2 = {self.heat_ratio} > 0.5"
            )

    @property
    def heat_ratio(self):
        return self.dt / self.dx**2


class FourDVarSystem:
    """Matrix-free 4D-VAR system S = L^T D^{-1} L + H^T R^{-1} H.

    L is block lower bidiagonal with -M subdiagonal blocks (M the explicit
    Euler heat stencil with homogeneous Dirichlet rows), D^{-1} and R^{-1}
    log-spaced diagonals, H block-diagonal anti-diagonal selectors.
    The factor Q = L^T D^{-1/2} of A = L^T D^{-1} L solves exactly by block
    substitution through L.
    """

    def __init__(self, cfg):
        self.cfg = cfg
        n, nt, m = cfg.n, cfg.steps + 1, cfg.m
        self.state_dim = n * nt
        self.obs_dim = m * nt
        self.d_inv = np.geomspace(10.0**-cfg.tau_d, 10.0**cfg.tau_d, self.state_dim)
        self.r_inv = np.geomspace(10.0**-cfg.tau_r, 10.0**cfg.tau_r, self.obs_dim)
        self._d_inv_sqrt = np.sqrt(self.d_inv)
        self._ratio = cfg.heat_ratio
        self.rhs = make_rng(cfg.seed, 7).standard_normal(self.state_dim)
        self.rhs /= np.linalg.norm(self.rhs)

    # -- block pieces ------------------------------------------------------

    def model_step(self, x):
        """Apply the heat stencil M (first/last rows and columns zero)."""
        r = self._ratio
        y = np.zeros_like(x)
        xi = x[1:-1]
        yi = (1.0 - 2.0 * r) * xi
        yi[1:] += r * xi[:-1]
        yi[:-1] += r * xi[1:]
        y[1:-1] = yi
        return y

    def model_matrix(self):
        n = self.cfg.n
        r = self._ratio
        m = np.zeros((n, n))
        idx = np.arange(1, n - 1)
        m[idx, idx] = 1.0 - 2.0 * r
        m[idx[:-1], idx[:-1] + 1] = r
        m[idx[1:], idx[1:] - 1] = r
        return m

    def _blocks(self, x):
        return x.reshape(self.cfg.steps + 1, self.cfg.n)

    def l_apply(self, x):
        xb = self._blocks(np.asarray(x, dtype=float))
        out = xb.copy()
        for i in range(1, xb.shape[0]):
            out[i] -= self.model_step(xb[i - 1])
        return out.ravel()

    def lt_apply(self, x):
        xb = self._blocks(np.asarray(x, dtype=float))
        out = xb.copy()
        for i in range(xb.shape[0] - 1):
            out[i] -= self.model_step(xb[i + 1])
        return out.ravel()

    def l_solve(self, x):
        xb = self._blocks(np.asarray(x, dtype=float))
        out = np.empty_like(xb)
        out[0] = xb[0]
        for i in range(1, xb.shape[0]):
            out[i] = xb[i] + self.model_step(out[i - 1])
        return out.ravel()

    def lt_solve(self, x):
        xb = self._blocks(np.asarray(x, dtype=float))
        out = np.empty_like(xb)
        out[-1] = xb[-1]
        for i in range(xb.shape[0] - 2, -1, -1):
            out[i] = xb[i] + self.model_step(out[i + 1])
        return out.ravel()

    def h_apply(self, x):
        xb = self._blocks(np.asarray(x, dtype=float))
        return xb[:, : self.cfg.m][:, ::-1].ravel()

    def ht_apply(self, y):
        yb = np.asarray(y, dtype=float).reshape(self.cfg.steps + 1, self.cfg.m)
        out = np.zeros((self.cfg.steps + 1, self.cfg.n))
        out[:, : self.cfg.m] = yb[:, ::-1]
        return out.ravel()

    # -- assembled operators ----------------------------------------------

    def background_apply(self, x):
        """A x with A = L^T D^{-1} L."""
        return self.lt_apply(self.d_inv * self.l_apply(x))

    def observation_apply(self, x):
        """H^T R^{-1} H x."""
        return self.ht_apply(self.r_inv * self.h_apply(x))

    def s_apply(self, x):
        return self.background_apply(x) + self.observation_apply(x)

    def s_operator(self):
        return LinearOperator(self.state_dim, self.s_apply, flavor="callback")

    def observation_operator(self):
        return LinearOperator(self.state_dim, self.observation_apply, flavor="callback")

    def q_factor(self):
        """Q = L^T D^{-1/2} with exact block-substitution solves."""
        ds = self._d_inv_sqrt
        return FactoredSpd(
            self.state_dim,
            factor_apply=lambda x: self.lt_apply(ds * x),
            factor_adjoint_apply=lambda x: ds * self.l_apply(x),
            factor_solve=lambda x: self.lt_solve(x) / ds,
            factor_adjoint_solve=lambda x: self.l_solve(x / ds),
        )

    def g_operator(self):
        """G = Q^{-1} H^T R^{-1} H Q^{-T} as a matrix-free operator."""
        q = self.q_factor()

        def apply(x):
            return q.factor_solve(self.observation_apply(q.factor_adjoint_solve(x)))

        return LinearOperator(self.state_dim, apply, flavor="callback")

    def export_blocks(self, directory):
        """Write the per-block building matrices in Matrix Market form."""
        import os

        os.makedirs(directory, exist_ok=True)
        write_matrix(os.path.join(directory, "model_step.mtx"), self.model_matrix())
        write_matrix(os.path.join(directory, "d_inv.mtx"), np.diag(self.d_inv))
        write_matrix(os.path.join(directory, "r_inv.mtx"), np.diag(self.r_inv))
        h0 = np.zeros((self.cfg.m, self.cfg.n))
        h0[np.arange(self.cfg.m - 1, -1, -1), np.arange(self.cfg.m)] = 1.0
        with open(os.path.join(directory, "observation_block.mtx"), "w") as fh:
            fh.write("%%MatrixMarket matrix coordinate real general\n")
            entries = np.argwhere(h0 != 0)
            fh.write(f"{self.cfg.m} {self.cfg.n} {len(entries)}\n")
            for i, j in entries:
                fh.write(f"{i + 1} {j + 1} 1.0\n")


def assemble_heat_4dvar(cfg):
    return FourDVarSystem(cfg)


def build_4dvar_preconditioners(system, rank, seed=0, variants=("ldl", "scaled_nystrom", "nonscaled_nystrom")):
    """Build the 4D-VAR preconditioner roster at the given truncation rank.

    The matrix G is only touched through products realized as
    Q^{-1} H^T R^{-1} H Q^{-T}.  Rank 0 degenerates to the LDL baseline.
    """
    if rank > system.obs_dim:
        raise ValueError(f"rank {rank} exceeds observation dimension {system.obs_dim}")
    q = system.q_factor()
    out = {}
    if "ldl" in variants:
        out["ldl"] = Preconditioner(system.state_dim, "ldl", q.solve)
    if "scaled_nystrom" in variants:
        if rank == 0:
            gr = LowRankEig.zero(system.state_dim, 0)
            gr.basis = np.zeros((system.state_dim, 0))
            gr.values = np.zeros(0)
        else:
            gr = nystrom(system.g_operator(), SketchConfig(rank=rank, seed=seed),
                         range_mode="qr")
        out["scaled_nystrom"] = build_scaled(q, gr)
    if "nonscaled_nystrom" in variants:
        if rank == 0:
            br = LowRankEig.zero(system.state_dim, 0)
            br.basis = np.zeros((system.state_dim, 0))
            br.values = np.zeros(0)
        else:
            br = nystrom(system.observation_operator(),
                         SketchConfig(rank=rank, seed=seed + 1), range_mode="qr")
        out["nonscaled_nystrom"] = build_nonscaled(q, br)
    return out
