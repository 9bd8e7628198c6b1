import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_reversible
from revmarkov.exceptions import InputError, NoConvergence
from revmarkov.generators import banded_reversible, generate
from revmarkov.markov import stationary_vector
from revmarkov.oracle import AffineProjector, dykstra_chain, dykstra_nearest, project_affine
from revmarkov.pipeline import SolveRequest, nearest_reversible
from revmarkov.trust_region import TrustRegionConfig


def random_pi(n, seed):
    pi = np.random.default_rng(seed).uniform(0.2, 1.0, n)
    return pi / pi.sum()


def feasible_null_basis(pi):
    """Orthonormal basis of ``{X : X 1 = 0, D_pi X symmetric}`` via SVD of the stacked constraints."""
    n = len(pi)
    rows = []
    for i in range(n):
        r = np.zeros((n, n))
        r[i, :] = 1
        rows.append(r.ravel())
    for i in range(n):
        for j in range(i + 1, n):
            r = np.zeros((n, n))
            r[i, j], r[j, i] = pi[i], -pi[j]
            rows.append(r.ravel())
    C = np.array(rows)
    _, s, Vt = np.linalg.svd(C)
    rank = int(np.sum(s > 1e-12 * s[0]))
    return Vt[rank:]


class TestAffine:
    def test_feasible_fixed(self):
        B, pi = random_reversible(5, 0)
        np.testing.assert_allclose(project_affine(pi, B), B, atol=1e-14)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(2, 7), st.integers(0, 10_000))
    def test_residuals_and_idempotence(self, n, seed):
        pi = random_pi(n, seed)
        proj = AffineProjector(pi)
        Z = np.random.default_rng(seed).standard_normal((n, n))
        X = proj(Z)
        assert max(proj.residuals(X)) <= 1e-11
        np.testing.assert_allclose(proj(X), X, atol=1e-12)

    @pytest.mark.parametrize("seed", range(4))
    def test_correction_orthogonal_to_null_space(self, seed):
        n = 5
        pi = random_pi(n, seed)
        Z = np.random.default_rng(seed + 10).standard_normal((n, n))
        X = project_affine(pi, Z)
        N = feasible_null_basis(pi)
        assert N.shape[0] == (n - 1) * n // 2
        assert np.abs(N @ (Z - X).ravel()).max() <= 1e-12

    def test_rejects_zero_pi(self):
        with pytest.raises(InputError):
            AffineProjector(np.array([0.5, 0.5, 0.0]))


class TestDykstra:
    def test_reversible_fixed(self):
        B, pi = random_reversible(6, 1)
        np.testing.assert_allclose(dykstra_nearest(B, pi), B, atol=1e-9)

    @pytest.mark.parametrize("seed", range(5))
    def test_feasible_output(self, seed):
        A, _ = generate("uniform", 8, seed)
        pi = stationary_vector(A).pi
        X = dykstra_nearest(A, pi)
        F = pi[:, None] * X
        assert X.min() >= 0
        assert np.abs(X.sum(axis=1) - 1).max() <= 1e-9
        assert np.abs(F - F.T).max() <= 1e-9
        assert np.abs(pi @ X - pi).max() <= 1e-9

    @pytest.mark.parametrize("seed", range(5))
    def test_objective_not_above_pipeline(self, seed):
        A, _ = generate("normal", 10, seed)
        P = nearest_reversible(SolveRequest(A)).P
        D, _ = dykstra_chain(A)
        assert 0.5 * np.sum((D - A) ** 2) <= 0.5 * np.sum((P - A) ** 2) + 1e-8

    @pytest.mark.parametrize("seed", range(3))
    def test_matches_pipeline_on_interior_solution(self, seed):
        A, _ = generate("uniform", 5, 200 + seed)
        D, _ = dykstra_chain(A)
        assert D.min() > 1e-8
        P = nearest_reversible(SolveRequest(A, solver=TrustRegionConfig(grad_tol=1e-10))).P
        assert np.linalg.norm(P - D) / np.linalg.norm(A) <= 1e-6

    def test_boundary_solution_has_zeros(self):
        # one-way off-band transition: its reverse entry is zero, so the projection must clip
        A, pi = banded_reversible(6, 1, seed=3)
        A[0, 3] = 0.05
        A /= A.sum(axis=1, keepdims=True)
        D = dykstra_nearest(A, pi)
        assert np.sum(D == 0.0) > 0

    def test_no_convergence(self):
        A, _ = generate("uniform", 6, 0)
        with pytest.raises(NoConvergence):
            dykstra_nearest(A, stationary_vector(A).pi, tol=1e-16, max_iter=3)

    def test_chain_copies_transient_rows(self, five_state):
        P, pi_used = dykstra_chain(five_state)
        np.testing.assert_array_equal(P[3:], five_state[3:])
        assert pi_used[3:].tolist() == [0.0, 0.0]
