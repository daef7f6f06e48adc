"""Preconditioned conjugate gradient and dense generalized-eigenvalue
diagnostics."""

from dataclasses import dataclass, field

import numpy as np

from .errors import DenseCapExceeded, DimensionMismatch
from .linop import DenseSym, LinearOperator, chol_lower, dense_eig_sym

__all__ = ["SolveReport", "pcg_solve", "generalized_eigs", "extreme_eigs_estimate",
           "lanczos_extreme_eigs"]

DENSE_CAP = 2000


@dataclass
class SolveReport:
    """PCG outcome: solution, iteration count, relative residual history and
    a termination tag (converged | max_iter | breakdown)."""

    solution: np.ndarray
    iterations: int
    residual_history: list = field(default_factory=list)
    termination: str = "max_iter"


def pcg_solve(s, b, precond=None, tol=1e-7, maxit=1000, x0=None, recompute_every=50):
    """Solve S x = b by preconditioned conjugate gradients.

    Stops when the (unpreconditioned) relative residual ||b - S x||/||b||
    drops below ``tol``.  The recurrence residual is replaced by an explicit
    one every ``recompute_every`` iterations to guard against drift.
    Breakdown (p^T S p <= 0) is reported, not raised.
    """
    if not isinstance(s, LinearOperator):
        if isinstance(s, DenseSym):
            s = s.as_operator()
        else:
            s = LinearOperator.from_dense(np.asarray(s, dtype=float))
    b = np.asarray(b, dtype=float)
    if b.shape != (s.dim,):
        raise DimensionMismatch((s.dim,), b.shape)
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")

    x = np.zeros(s.dim) if x0 is None else np.array(x0, dtype=float)
    if x.shape != (s.dim,):
        raise DimensionMismatch((s.dim,), x.shape)

    def apply_p(v):
        return v.copy() if precond is None else precond.inverse_apply(v)

    b_norm = float(np.linalg.norm(b))
    if b_norm == 0.0:
        return SolveReport(solution=np.zeros(s.dim), iterations=0,
                           residual_history=[0.0], termination="converged")

    r = b - s.matvec(x)
    history = [float(np.linalg.norm(r)) / b_norm]
    if history[0] <= tol:
        return SolveReport(solution=x, iterations=0, residual_history=history,
                           termination="converged")
    z = apply_p(r)
    p = z.copy()
    rz = float(r @ z)
    termination = "max_iter"
    it = 0
    for it in range(1, maxit + 1):
        sp = s.matvec(p)
        psp = float(p @ sp)
        if psp <= 0.0:
            termination = "breakdown"
            it -= 1
            break
        alpha = rz / psp
        x = x + alpha * p
        if it % recompute_every == 0:
            r = b - s.matvec(x)
        else:
            r = r - alpha * sp
        rel = float(np.linalg.norm(r)) / b_norm
        history.append(rel)
        if rel <= tol:
            termination = "converged"
            break
        z = apply_p(r)
        rz_new = float(r @ z)
        beta = rz_new / rz
        rz = rz_new
        p = z + beta * p
    return SolveReport(solution=x, iterations=it, residual_history=history,
                       termination=termination)


def generalized_eigs(precond, s, cap=DENSE_CAP):
    """Descending eigenvalues of P^{-1} S via a symmetric reduction.

    With P^{-1} = W = L L^T, the spectrum of P^{-1} S equals that of the
    symmetric matrix L^T S L.  Dense only; refuses above ``cap``.
    """
    s = np.asarray(s, dtype=float)
    n = s.shape[0]
    if n > cap:
        raise DenseCapExceeded(
            f"n = {n} exceeds the dense cap {cap}; use iterative extreme-eigenvalue "
            "estimation instead"
        )
    w = precond.dense_inverse()
    l = chol_lower(w)
    vals, _ = dense_eig_sym(l.T @ s @ l)
    return vals


def _lanczos_top(apply_op, dim, steps, rng, reltol):
    """Largest Ritz value of a symmetric operator via Lanczos.

    Full (twice-repeated) reorthogonalization; stops early once the top Ritz
    value stagnates to ``reltol`` between checks or the residual norm
    collapses.
    """
    basis = np.empty((steps + 1, dim))
    v = rng.standard_normal(dim)
    v /= np.linalg.norm(v)
    basis[0] = v
    alpha = np.zeros(steps)
    beta = np.zeros(steps)
    top = -np.inf
    done = 0
    for j in range(steps):
        w = apply_op(basis[j])
        alpha[j] = float(basis[j] @ w)
        w -= alpha[j] * basis[j]
        if j > 0:
            w -= beta[j - 1] * basis[j - 1]
        for _ in range(2):
            w -= basis[: j + 1].T @ (basis[: j + 1] @ w)
        beta[j] = float(np.linalg.norm(w))
        done = j + 1
        if beta[j] < 1e-12:
            break
        basis[j + 1] = w / beta[j]
        if done % 10 == 0 or done == steps:
            tri = (np.diag(alpha[:done]) + np.diag(beta[: done - 1], 1)
                   + np.diag(beta[: done - 1], -1))
            new_top = float(np.linalg.eigvalsh(tri)[-1])
            if abs(new_top - top) <= reltol * abs(new_top):
                top = new_top
                break
            top = new_top
    tri = (np.diag(alpha[:done]) + np.diag(beta[: done - 1], 1)
           + np.diag(beta[: done - 1], -1))
    return float(np.linalg.eigvalsh(tri)[-1])


def lanczos_extreme_eigs(s, precond=None, steps_max=400, steps_min=80,
                         reltol=1e-6, solve_tol=1e-11, solve_maxit=None, seed=0):
    """Estimate the extreme eigenvalues of an SPD operator via Lanczos.

    The largest eigenvalue is the top Ritz value of Lanczos on S; the
    smallest is the reciprocal of the top Ritz value of Lanczos on S^{-1},
    each application of which is a PCG solve (optionally preconditioned).
    Converges much faster than (inverse) power iteration when the relevant
    end of the spectrum is clustered.  Returns (lambda_min, lambda_max).
    """
    if not isinstance(s, LinearOperator):
        s = LinearOperator.from_dense(np.asarray(s, dtype=float))
    rng = np.random.Generator(np.random.Philox(key=[seed, 0x6c616e63]))
    lam_max = _lanczos_top(s.matvec, s.dim, min(steps_max, s.dim), rng, reltol)

    maxit = 10 * s.dim if solve_maxit is None else solve_maxit

    def s_inv(v):
        return pcg_solve(s, v, precond, tol=solve_tol, maxit=maxit).solution

    inv_top = _lanczos_top(s_inv, s.dim, min(steps_min, s.dim), rng, reltol)
    return 1.0 / inv_top, lam_max


def extreme_eigs_estimate(s, precond=None, tol=1e-3, maxit=300, solve_tol=1e-9,
                          solve_maxit=None, seed=0):
    """Estimate the extreme eigenvalues of an SPD operator iteratively.

    The largest eigenvalue comes from power iteration; the smallest from
    inverse power iteration, where each inverse application is a PCG solve
    (optionally preconditioned).  Returns (lambda_min, lambda_max).
    """
    if not isinstance(s, LinearOperator):
        s = LinearOperator.from_dense(np.asarray(s, dtype=float))
    rng = np.random.Generator(np.random.Philox(key=[seed, 0x65696773]))
    x = rng.standard_normal(s.dim)
    x /= np.linalg.norm(x)
    lam_max = 0.0
    for _ in range(maxit):
        y = s.matvec(x)
        lam = float(x @ y)
        y_norm = np.linalg.norm(y)
        if y_norm == 0.0:
            return 0.0, 0.0
        x = y / y_norm
        if abs(lam - lam_max) <= tol / 10.0 * abs(lam):
            lam_max = lam
            break
        lam_max = lam

    x = rng.standard_normal(s.dim)
    x /= np.linalg.norm(x)
    lam_min = lam_max
    for _ in range(maxit):
        rep = pcg_solve(s, x, precond, tol=solve_tol,
                        maxit=10 * s.dim if solve_maxit is None else solve_maxit)
        y = rep.solution
        mu = float(x @ y)  # Rayleigh quotient of S^{-1}
        y_norm = np.linalg.norm(y)
        x = y / y_norm
        lam = 1.0 / mu
        if abs(lam - lam_min) <= tol / 10.0 * abs(lam):
            lam_min = lam
            break
        lam_min = lam
    return lam_min, lam_max
