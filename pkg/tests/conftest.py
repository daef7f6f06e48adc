import numpy as np
import pytest

from bregman_precond import assemble_synthetic, cholesky_factor, truncated_evd
from bregman_precond.linop import chol_lower, tri_solve


def random_spd(n, seed, shift=1.0):
    rng = np.random.Generator(np.random.Philox(key=[seed, 0]))
    m = rng.standard_normal((n, n))
    return m @ m.T / n + shift * np.eye(n)


def random_psd_rank(n, r, seed):
    rng = np.random.Generator(np.random.Philox(key=[seed, 1]))
    f = rng.standard_normal((n, r))
    return f @ f.T / n


def dense_precond(p):
    """Materialize P itself from a preconditioner's inverse action."""
    w = p.dense_inverse()
    l = chol_lower(w)
    dense = tri_solve(l, tri_solve(l, np.eye(p.dim)), transpose=True)
    return 0.5 * (dense + dense.T)


def random_instance(n, m, r, seed):
    """Dense SPD instance S = A + B with rank-m B, plus its scaled pieces."""
    a = random_spd(n, seed)
    b = random_psd_rank(n, m, seed)
    q = cholesky_factor(a)
    g = np.column_stack([q.factor_solve(b[:, j]) for j in range(n)])
    g = np.column_stack([q.factor_solve(row) for row in g])
    g = 0.5 * (g + g.T)
    return a, b, q, g


@pytest.fixture
def paper_diag_example():
    """The worked diagonal example: A, B, Q, G and the rank-2 pieces."""
    a = np.diag([1.1, 1.05, 0.375, 0.05, 0.05, 0.05])
    b = np.diag([1.0, 0.5, 0.25, 0.1, 0.0, 0.0])
    g = np.diag(np.diag(b) / np.diag(a))
    return a, b, g
