import numpy as np
import pytest

from bregman_precond import (
    DenseCapExceeded,
    DimensionMismatch,
    LinearOperator,
    build_scaled,
    cholesky_factor,
    extreme_eigs_estimate,
    generalized_eigs,
    identity_precond,
    lanczos_extreme_eigs,
    pcg_solve,
    truncated_evd,
)
from bregman_precond.precond import Preconditioner
from bregman_precond.sketch import make_rng

from conftest import dense_precond, paper_diag_example, random_spd


class TestPcgSolve:
    def test_identity_converges_immediately(self):
        rep = pcg_solve(np.eye(5), np.arange(1.0, 6.0), identity_precond(5), tol=1e-10)
        assert rep.iterations == 1
        assert rep.termination == "converged"
        assert np.allclose(rep.solution, np.arange(1.0, 6.0))

    def test_distinct_eigenvalue_count_bound(self):
        rng = make_rng(3, 0)
        o, _ = np.linalg.qr(rng.standard_normal((20, 20)))
        vals = np.repeat([1.0, 2.0, 5.0, 10.0], 5)
        s = (o * vals) @ o.T
        rep = pcg_solve(s, rng.standard_normal(20), tol=1e-10)
        assert rep.termination == "converged"
        assert rep.iterations <= 4

    def test_paper_example_step_bound(self, paper_diag_example):
        a, b, g = paper_diag_example
        q = cholesky_factor(a)
        p = build_scaled(q, truncated_evd(g, 2))
        rep = pcg_solve(a + b, np.ones(6), p, tol=1e-10)
        assert rep.termination == "converged"
        assert rep.iterations <= 3  # rank(B) - r + 1

    def test_residual_history_contract(self):
        s = random_spd(12, 5)
        b = np.ones(12)
        rep = pcg_solve(s, b, tol=1e-8)
        assert len(rep.residual_history) == rep.iterations + 1
        assert rep.residual_history[-1] <= 1e-8
        assert np.isclose(rep.residual_history[0], np.linalg.norm(b) / np.linalg.norm(b))

    def test_monotone_s_norm_error(self):
        s = random_spd(15, 7)
        b = make_rng(7, 1).standard_normal(15)
        x_true = np.linalg.solve(s, b)
        # re-run with increasing maxit to sample iterates
        prev = np.inf
        for k in range(1, 12):
            rep = pcg_solve(s, b, tol=1e-15, maxit=k)
            e = rep.solution - x_true
            err = float(np.sqrt(e @ (s @ e)))
            assert err <= prev + 1e-10
            prev = err

    def test_condition_number_rate_bound(self):
        s = random_spd(20, 11)
        b = make_rng(11, 2).standard_normal(20)
        x_true = np.linalg.solve(s, b)
        kappa = float(np.linalg.cond(s))
        rho = (np.sqrt(kappa) - 1) / (np.sqrt(kappa) + 1)
        e0 = np.sqrt(x_true @ (s @ x_true))
        for k in (2, 5, 8):
            rep = pcg_solve(s, b, tol=1e-15, maxit=k)
            e = rep.solution - x_true
            assert np.sqrt(e @ (s @ e)) <= 2 * rho**k * e0 + 1e-10

    def test_deterministic(self):
        s = random_spd(10, 13)
        b = np.arange(10.0)
        r1 = pcg_solve(s, b, tol=1e-9)
        r2 = pcg_solve(s, b, tol=1e-9)
        assert np.array_equal(r1.solution, r2.solution)
        assert r1.residual_history == r2.residual_history

    def test_breakdown_reported(self):
        s = np.diag([1.0, -1.0])
        rep = pcg_solve(LinearOperator.from_dense(s), np.array([0.0, 1.0]), tol=1e-12)
        assert rep.termination == "breakdown"

    def test_max_iter(self):
        s = random_spd(30, 17, shift=1e-4)
        rep = pcg_solve(s, np.ones(30), tol=1e-14, maxit=2)
        assert rep.termination == "max_iter"
        assert rep.iterations == 2

    def test_zero_rhs(self):
        rep = pcg_solve(np.eye(4), np.zeros(4))
        assert rep.termination == "converged"
        assert np.allclose(rep.solution, 0.0)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            pcg_solve(np.eye(3), np.ones(4))

    def test_explicit_residual_recompute(self):
        s = random_spd(25, 19, shift=1e-2)
        rep = pcg_solve(s, np.ones(25), tol=1e-10, maxit=300, recompute_every=10)
        x = rep.solution
        true_rel = np.linalg.norm(np.ones(25) - s @ x) / np.linalg.norm(np.ones(25))
        assert np.isclose(true_rel, rep.residual_history[-1], atol=1e-9)


class TestGeneralizedEigs:
    def test_p_equals_s(self):
        s = random_spd(7, 23)
        p = Preconditioner(7, "dense", lambda x: np.linalg.solve(s, x))
        assert np.allclose(generalized_eigs(p, s), 1.0, atol=1e-9)

    def test_paper_example_multiset(self, paper_diag_example):
        a, b, g = paper_diag_example
        q = cholesky_factor(a)
        p = build_scaled(q, truncated_evd(g, 2))
        eigs = np.sort(generalized_eigs(p, a + b))[::-1]
        assert np.allclose(eigs, [1.6667, 1.4762, 1, 1, 1, 1], atol=1e-4)

    def test_dense_oracle(self):
        s = random_spd(9, 29)
        p_dense = random_spd(9, 31)
        p = Preconditioner(9, "dense", lambda x: np.linalg.solve(p_dense, x))
        expected = np.sort(np.linalg.eigvals(np.linalg.solve(p_dense, s)).real)[::-1]
        assert np.allclose(generalized_eigs(p, s), expected, atol=1e-8)

    def test_dense_cap(self):
        with pytest.raises(DenseCapExceeded):
            generalized_eigs(identity_precond(3), np.eye(3), cap=2)


class TestExtremeEigsEstimate:
    def test_matches_dense_spectrum(self):
        s = random_spd(30, 37)
        w = np.linalg.eigvalsh(s)
        lo, hi = extreme_eigs_estimate(s, tol=1e-6, maxit=2000)
        assert np.isclose(hi, w[-1], rtol=1e-3)
        assert np.isclose(lo, w[0], rtol=1e-3)

    def test_preconditioned_inverse_iteration(self):
        s = random_spd(20, 41)
        w = np.linalg.eigvalsh(s)
        p = Preconditioner(20, "dense", lambda x: np.linalg.solve(s, x))
        lo, _ = extreme_eigs_estimate(s, p, tol=1e-6, maxit=2000)
        assert np.isclose(lo, w[0], rtol=1e-3)


class TestLanczosExtremeEigs:
    def test_matches_dense_spectrum(self):
        s = random_spd(40, 43)
        w = np.linalg.eigvalsh(s)
        lo, hi = lanczos_extreme_eigs(s, reltol=1e-10)
        assert np.isclose(hi, w[-1], rtol=1e-6)
        assert np.isclose(lo, w[0], rtol=1e-6)

    def test_clustered_small_end(self):
        # inverse power iteration crawls on a clustered lower end; Lanczos
        # should still nail lambda_min
        rng = make_rng(47, 0)
        o, _ = np.linalg.qr(rng.standard_normal((60, 60)))
        vals = np.concatenate([np.linspace(1e-3, 1.2e-3, 20), np.linspace(0.5, 50.0, 40)])
        s = (o * vals) @ o.T
        lo, hi = lanczos_extreme_eigs(s, reltol=1e-12)
        assert np.isclose(lo, 1e-3, rtol=1e-5)
        assert np.isclose(hi, 50.0, rtol=1e-5)

    def test_preconditioned_solves(self):
        s = random_spd(25, 53)
        w = np.linalg.eigvalsh(s)
        p = Preconditioner(25, "dense", lambda x: np.linalg.solve(s, x))
        lo, hi = lanczos_extreme_eigs(s, p, reltol=1e-10)
        assert np.isclose(lo, w[0], rtol=1e-6)
        assert np.isclose(hi, w[-1], rtol=1e-6)

    def test_matrix_free_fourdvar_oracle(self):
        from bregman_precond import FourDVarConfig, assemble_heat_4dvar

        sys = assemble_heat_4dvar(FourDVarConfig(n=20, steps=4, m=10, seed=0))
        dense = np.column_stack([sys.s_apply(e) for e in np.eye(sys.state_dim)])
        w = np.linalg.eigvalsh(dense)
        lo, hi = lanczos_extreme_eigs(sys.s_operator(), reltol=1e-10)
        assert np.isclose(hi / lo, w[-1] / w[0], rtol=1e-5)
