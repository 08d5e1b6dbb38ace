import math

import numpy as np
import pytest

from lapflow.graph_core import StandardSplitting, generate, ground, laplacian
from lapflow.reference_solver import (
    RICHARDSON_RATE,
    InverseChainView,
    direct_solve,
    parallel_esolve,
    parallel_rsolve,
    richardson_iterations,
)
from lapflow.spectral import EPS_D, approx_order_check, chain_length, estimate_condition, validate_sddm
from conftest import grounded_random, mnorm, mnorm_rel_error
from oracles import dense_chain_z, splitting_from_matrix


def path_graph(n):
    return generate("path", {"n": n})


def chain_for(s, safety=1.02):
    kappa = estimate_condition(s, tol=1e-10) * safety
    return InverseChainView(s, chain_length(kappa, "estimated"))


class TestDirectSolve:
    def test_scaled_identity(self):
        s = StandardSplitting([2.0, 2.0], np.zeros((2, 2)))
        assert np.allclose(direct_solve(s, [4.0, 6.0]), [2.0, 3.0])

    def test_grounded_path3(self):
        s = ground(laplacian(path_graph(3)), 2)
        assert np.allclose(direct_solve(s, [1.0, 0.0]), [2.0, 1.0])

    def test_laplacian_needs_zero_sum(self):
        s = laplacian(path_graph(2))
        with pytest.raises(ValueError):
            direct_solve(s, [1.0, 1.0])

    def test_laplacian_mean_zero_solution(self):
        s = laplacian(path_graph(3))
        x = direct_solve(s, [1.0, 0.0, -1.0])
        assert np.allclose(x, [1.0, 0.0, -1.0])
        assert abs(x.mean()) <= 1e-12

    def test_residual_guarantee(self):
        s = grounded_random(30, 80, seed=3, w_min=0.1, w_max=10.0)
        rng = np.random.default_rng(1)
        b = rng.standard_normal(s.n)
        x = direct_solve(s, b)
        assert np.linalg.norm(s.dense() @ x - b) <= 1e-10 * np.linalg.norm(b)

    def test_rejects_indefinite(self):
        s = StandardSplitting([1.0, 1.0], [[0.0, 2.0], [2.0, 0.0]])
        with pytest.raises(ValueError):
            direct_solve(s, [1.0, 0.0])

    def test_rejects_wrong_length(self):
        s = StandardSplitting([1.0, 1.0], np.zeros((2, 2)))
        with pytest.raises(ValueError):
            direct_solve(s, [1.0, 2.0, 3.0])


class TestRichardsonIterations:
    def test_rate_constant(self):
        assert RICHARDSON_RATE == pytest.approx(1.347377348329, abs=1e-12)

    def test_frozen_counts(self):
        table = {0.5: 1, 0.1: 2, 1e-2: 4, 1e-4: 7, 2.0 ** -14: 8}
        for eps, q in table.items():
            assert richardson_iterations(eps) == q

    def test_tenfold_tightening_adds_two(self):
        assert richardson_iterations(0.05) - richardson_iterations(0.5) == 2

    def test_domain(self):
        for bad in (0.0, -0.1, 0.6, 1.0):
            with pytest.raises(ValueError):
                richardson_iterations(bad)


class TestInverseChainView:
    def test_accepts_chainspec(self):
        s = ground(laplacian(path_graph(4)), 0)
        spec = chain_length(10.0)
        chain = InverseChainView(s, spec)
        assert chain.d == spec.d

    def test_rejects_negative_length(self):
        s = ground(laplacian(path_graph(4)), 0)
        with pytest.raises(ValueError):
            InverseChainView(s, -1)

    def test_p_power_matches_matrix_power(self, rng):
        s = grounded_random(10, 20, seed=0, w_min=0.5, w_max=2.0)
        chain = InverseChainView(s, 4)
        P = s.A.toarray() / s.D[None, :]
        v = rng.standard_normal(s.n)
        for i in range(4):
            want = np.linalg.matrix_power(P, 2 ** i) @ v
            assert np.allclose(chain.apply_p_power(i, v), want, atol=1e-12)

    def test_q_power_matches_matrix_power(self, rng):
        s = grounded_random(10, 20, seed=0, w_min=0.5, w_max=2.0)
        chain = InverseChainView(s, 3)
        Q = s.A.toarray() / s.D[:, None]
        v = rng.standard_normal(s.n)
        for i in range(3):
            want = np.linalg.matrix_power(Q, 2 ** i) @ v
            assert np.allclose(chain.apply_q_power(i, v), want, atol=1e-12)

    def test_sparse_fallback_matches_dense(self, rng, monkeypatch):
        s = grounded_random(12, 24, seed=7)
        dense_chain = InverseChainView(s, 3)
        monkeypatch.setattr(InverseChainView, "DENSE_LIMIT", 0)
        sparse_chain = InverseChainView(s, 3)
        assert sparse_chain._ppow is None
        v = rng.standard_normal(s.n)
        for i in range(3):
            assert np.allclose(
                sparse_chain.apply_p_power(i, v), dense_chain.apply_p_power(i, v), atol=1e-10
            )
        b = rng.standard_normal(s.n)
        assert np.allclose(
            parallel_rsolve(sparse_chain, b), parallel_rsolve(dense_chain, b), atol=1e-10
        )


class TestParallelRSolve:
    def test_diagonal_system_is_exact(self):
        s = StandardSplitting([2.0, 4.0], np.zeros((2, 2)))
        chain = InverseChainView(s, 3)
        assert np.allclose(parallel_rsolve(chain, [2.0, 4.0]), [1.0, 1.0])

    def test_zero_length_chain_is_jacobi(self):
        s = ground(laplacian(path_graph(4)), 0)
        chain = InverseChainView(s, 0)
        b = np.array([1.0, 2.0, 3.0])
        assert np.allclose(parallel_rsolve(chain, b), b / s.D)

    def test_matches_dense_recursion(self, rng):
        for seed, (n, m) in [(0, (8, 14)), (1, (12, 25)), (2, (16, 40))]:
            s = grounded_random(n, m, seed=seed, w_min=0.5, w_max=3.0)
            chain = chain_for(s)
            Z = dense_chain_z(s, chain.d)
            b = rng.standard_normal(s.n)
            want = Z @ b
            got = parallel_rsolve(chain, b)
            assert np.linalg.norm(got - want) <= 1e-12 * np.linalg.norm(want)

    def test_operator_identity_small(self):
        # vector recursion applied to basis vectors reproduces the dense
        # chain operator entry for entry
        s = grounded_random(10, 18, seed=4)
        chain = chain_for(s)
        Z = dense_chain_z(s, chain.d)
        got = np.column_stack([parallel_rsolve(chain, e) for e in np.eye(s.n)])
        assert np.abs(got - Z).max() <= 1e-10

    def test_crude_sandwich(self):
        s = ground(laplacian(path_graph(5)), 0)
        chain = chain_for(s)
        Minv = np.linalg.inv(s.dense())
        res = approx_order_check(
            Minv, lambda v: parallel_rsolve(chain, v), EPS_D, probes=100, seed=0
        )
        assert res

    def test_crude_quality_bound(self, rng):
        s = grounded_random(14, 30, seed=6, w_min=0.5, w_max=2.0)
        chain = chain_for(s)
        bound = 2.0 * (math.exp(EPS_D) - 1.0) * math.exp(EPS_D)
        for _ in range(25):
            b = rng.standard_normal(s.n)
            xstar = direct_solve(s, b)
            xt = parallel_rsolve(chain, b)
            lhs = mnorm(s, xt - xstar) ** 2
            assert lhs <= bound * mnorm(s, xstar) ** 2 * (1 + 1e-9)

    def test_chain_links_stay_solvable(self):
        # one squaring step D - A D^{-1} A keeps diagonal dominance and
        # positive definiteness; the support may fall apart into the two
        # parity classes, so the connectivity flag is allowed to drop
        s = ground(laplacian(path_graph(6)), 0)
        M1 = np.diag(s.D) - s.A.toarray() @ np.diag(1.0 / s.D) @ s.A.toarray()
        s1 = splitting_from_matrix(M1)
        report = validate_sddm(s1)
        assert report.is_sdd
        assert report.positive_definite


class TestParallelESolve:
    def test_meets_target_on_path(self, rng):
        s = ground(laplacian(path_graph(10)), 0)
        chain = chain_for(s)
        b = rng.standard_normal(s.n)
        xstar = direct_solve(s, b)
        for eps in (0.5, 1e-2, 1e-4):
            xt = parallel_esolve(chain, b, eps)
            assert mnorm_rel_error(s, xt, xstar) <= eps

    def test_matches_manual_richardson(self, rng):
        s = grounded_random(12, 25, seed=9)
        chain = chain_for(s)
        b = rng.standard_normal(s.n)
        eps = 1e-2
        M = s.matrix()
        chi = parallel_rsolve(chain, b)
        y = chi.copy()
        for _ in range(richardson_iterations(eps)):
            y = y - parallel_rsolve(chain, M @ y) + chi
        assert np.allclose(parallel_esolve(chain, b, eps), y, atol=0, rtol=1e-14)

    def test_contraction_factor(self, rng):
        # every Richardson step contracts the M-norm error by at least the
        # guaranteed factor 2^{1/3} - 1 (with realized chains it is far
        # smaller); ratios are measured against the direct solution
        s = grounded_random(15, 35, seed=12, w_min=0.5, w_max=4.0)
        chain = chain_for(s)
        b = rng.standard_normal(s.n)
        xstar = direct_solve(s, b)
        M = s.matrix()
        chi = parallel_rsolve(chain, b)
        y = chi.copy()
        errs = [mnorm(s, y - xstar)]
        for _ in range(8):
            y = y - parallel_rsolve(chain, M @ y) + chi
            errs.append(mnorm(s, y - xstar))
        for before, after in zip(errs, errs[1:]):
            if before <= 1e-13 * mnorm(s, xstar):
                break
            assert after / before <= 0.26 + 1e-6

    def test_eps_domain(self):
        s = ground(laplacian(path_graph(4)), 0)
        chain = chain_for(s)
        with pytest.raises(ValueError):
            parallel_esolve(chain, np.ones(3), 0.6)
