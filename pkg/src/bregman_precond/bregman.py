"""Bregman matrix divergences (log-determinant, squared Frobenius, von
Neumann), the closed form for the scaled preconditioner, the eigenbasis term
decomposition used for heatmaps, and the randomized suboptimality bounds.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import HypothesisViolated, NotPositiveDefinite
from .linop import DenseSym, chol_lower, dense_eig_sym, tri_solve

__all__ = [
    "DivergenceReport",
    "TermMatrix",
    "divergence_ld",
    "divergence_scaled_closed_form",
    "divergence_frobenius",
    "divergence_von_neumann",
    "divergence_terms",
    "suboptimality_bound",
    "deviation_bound",
]


@dataclass
class DivergenceReport:
    """Log-determinant divergence split into its trace and logdet terms.

    value = trace_term + logdet_term - n.
    """

    value: float
    trace_term: float
    logdet_term: float


@dataclass
class TermMatrix:
    """Eigenbasis decomposition of the log-determinant divergence.

    ``alignment[i, j]`` is the squared overlap between the i-th eigenvector
    of X and the j-th eigenvector of Y (doubly stochastic);
    ``scalar_terms[i, j]`` is lambda_i/theta_j - log(lambda_i/theta_j) - 1.
    The elementwise product sums to the divergence.
    """

    alignment: np.ndarray
    scalar_terms: np.ndarray


def _dense(x):
    if isinstance(x, DenseSym):
        return x.entries
    return np.asarray(x, dtype=float)


def _logdet_from_chol(l):
    return 2.0 * float(np.sum(np.log(np.diag(l))))


def divergence_ld(x, y):
    """D_LD(X, Y) = trace(X Y^{-1}) - logdet(X Y^{-1}) - n for SPD X, Y.

    The trace term goes through Cholesky solves with Y; the logdet term is
    the difference of summed log pivots, which is overflow-safe.
    """
    x = _dense(x)
    y = _dense(y)
    n = x.shape[0]
    ly = chol_lower(y)
    lx = chol_lower(x)
    # trace(X Y^{-1}) = || L_y^{-1} L_x ||_F^2
    z = tri_solve(ly, lx)
    trace_term = float(np.sum(z * z))
    logdet_term = -(_logdet_from_chol(lx) - _logdet_from_chol(ly))
    return DivergenceReport(
        value=trace_term + logdet_term - n,
        trace_term=trace_term,
        logdet_term=logdet_term,
    )


def _scalar_ld(t):
    return t - np.log(t) - 1.0


def divergence_scaled_closed_form(mu, r):
    """Closed-form D_LD of the scaled rank-r preconditioner against S.

    ``mu`` are the descending eigenvalues of G = Q^{-1} B Q^{-T}; the value
    is the tail sum over j > r of 1/(1+mu_j) - log(1/(1+mu_j)) - 1, taken
    over the nonzero part of the spectrum.
    """
    mu = _clamped_spectrum(mu)
    rank_b = int(np.count_nonzero(mu > 0))
    if r >= rank_b:
        return 0.0
    tail = mu[r:rank_b]
    return float(np.sum(_scalar_ld(1.0 / (1.0 + tail))))


def divergence_frobenius(x, y):
    """Squared Frobenius divergence ||X - Y||_F^2."""
    d = _dense(x) - _dense(y)
    return float(np.sum(d * d))


def divergence_von_neumann(x, y):
    """Von Neumann divergence trace(X log X - X log Y - X + Y) for SPD X, Y."""
    x = _dense(x)
    y = _dense(y)
    wx, vx = dense_eig_sym(x)
    wy, vy = dense_eig_sym(y)
    if np.any(wx <= 0) or np.any(wy <= 0):
        raise NotPositiveDefinite(
            int(np.argmax(wx <= 0) if np.any(wx <= 0) else np.argmax(wy <= 0)),
            "von Neumann divergence needs positive definite inputs",
        )
    overlap = (vx.T @ vy) ** 2
    tr_xlogx = float(np.sum(wx * np.log(wx)))
    tr_xlogy = float(wx @ overlap @ np.log(wy))
    return tr_xlogx - tr_xlogy - float(np.sum(wx)) + float(np.sum(wy))


def divergence_terms(x, y):
    """Eigenbasis term decomposition of D_LD(X, Y).

    alignment[i, j] = (u_i^T v_j)^2 with u_i eigenvectors of X and v_j of Y;
    scalar_terms[i, j] pairs lambda_i(X) with theta_j(Y).
    """
    x = _dense(x)
    y = _dense(y)
    wx, vx = dense_eig_sym(x)
    wy, vy = dense_eig_sym(y)
    if np.any(wx <= 0) or np.any(wy <= 0):
        raise NotPositiveDefinite(0, "divergence_terms needs positive definite inputs")
    alignment = (vx.T @ vy) ** 2
    ratio = wx[:, None] / wy[None, :]
    return TermMatrix(alignment=alignment, scalar_terms=_scalar_ld(ratio))


def _clamped_spectrum(values):
    """Validate a nonnegative spectrum, forgiving roundoff-level negatives."""
    lam = np.asarray(values, dtype=float)
    top = max(float(lam[0]) if lam.size else 0.0, 1e-300)
    if np.any(lam < -1e-10 * top):
        raise ValueError("spectrum must be nonnegative")
    return np.clip(lam, 0.0, None)


def _spectrum_quantities(g_spectrum, r):
    lam = _clamped_spectrum(g_spectrum)
    n = lam.size
    tail_sq = float(np.sum(lam[r:] ** 2))
    lam_r1 = float(lam[r]) if r < n else 0.0
    rank_b = int(np.count_nonzero(lam > 0))
    lam_rank_b = float(lam[rank_b - 1]) if rank_b > 0 else 0.0
    inv_norm = math.sqrt(float(np.sum((1.0 + lam) ** -2)))
    c_r = inv_norm + r / (1.0 + lam_rank_b)
    return n, tail_sq, lam_r1, lam_rank_b, c_r


def suboptimality_bound(g_spectrum, r, p):
    """Expected Bregman suboptimality bound 2*eps*c_r for the randomized
    scaled preconditioner, plus the relative form.

    Requires oversampling p >= 2.
    """
    if p < 2:
        raise HypothesisViolated(f"expectation bound needs p >= 2, got {p}")
    n, tail_sq, lam_r1, lam_rank_b, c_r = _spectrum_quantities(g_spectrum, r)
    eps = math.sqrt((1.0 + r / (p - 1.0)) * tail_sq)
    absolute = 2.0 * eps * c_r
    t = 1.0 / (1.0 + lam_rank_b)
    denom = t - math.log(t) - 1.0
    if denom > 0 and n > r:
        relative = 2.0 * c_r * math.sqrt((1.0 + r / (p - 1.0)) / (n - r)) * lam_r1 / denom
    else:
        relative = math.inf if lam_r1 > 0 else 0.0
    return absolute, relative


def deviation_bound(g_spectrum, r, p, u=1.0, t=1.0):
    """Tail bound for the randomized scaled preconditioner's suboptimality.

    Returns (bound, probability); needs p >= 4 and u, t >= 1.
    """
    if p < 4:
        raise HypothesisViolated(f"deviation bound needs p >= 4, got {p}")
    if u < 1 or t < 1:
        raise HypothesisViolated("deviation bound needs u >= 1 and t >= 1")
    _, tail_sq, lam_r1, _, c_r = _spectrum_quantities(g_spectrum, r)
    bound = 2.0 * c_r * (
        (1.0 + t * math.sqrt(3.0 * r / (p + 1.0))) * math.sqrt(tail_sq)
        + u * t * math.e * math.sqrt(r + p) / (p + 1.0) * lam_r1
    )
    probability = 1.0 - 2.0 * t ** (-p) + math.exp(-(u**2) / 2.0)
    return bound, probability
