"""Endmember induction and abundance estimation against independent oracles."""

import itertools

import numpy as np
import pytest

from specbir.errors import DegenerateInputError
from specbir.unmixing import (
    EndmemberSet,
    characterize,
    nnls,
    nnls_abundances,
    normalized_mean_abundance,
    reconstruction_error,
    vca,
)


def nnls_by_enumeration(A, b):
    """Brute-force NNLS: try every active set, keep the best feasible point."""
    n = A.shape[1]
    best_x, best_val = np.zeros(n), float(np.dot(b, b))
    for size in range(1, n + 1):
        for passive in itertools.combinations(range(n), size):
            sol, *_ = np.linalg.lstsq(A[:, list(passive)], b, rcond=None)
            if (sol < -1e-12).any():
                continue
            x = np.zeros(n)
            x[list(passive)] = np.clip(sol, 0.0, None)
            val = float(np.sum((A @ x - b) ** 2))
            if val < best_val - 1e-12:
                best_x, best_val = x, val
    return best_x


def planted_patch(rng, n_pixels=60, m=4, q=32):
    """Noiseless pixels with the pure signatures planted as pixels 0..m-1."""
    E = rng.random((m, q)) + 0.1
    weights = rng.dirichlet(np.ones(m), size=n_pixels - m)
    abundances = np.vstack([np.eye(m), weights])
    return abundances @ E, E, abundances


class TestNnls:
    def test_orthogonal_design_analytic(self):
        E = EndmemberSet(np.array([[1.0, 0.0], [0.0, 1.0]]))
        p = 0.3 * E.vectors[0] + 0.7 * E.vectors[1]
        phi = nnls_abundances(p[None, :], E)
        np.testing.assert_allclose(phi[0], [0.3, 0.7], atol=1e-8)

    def test_pure_pixel_exact(self):
        rng = np.random.default_rng(0)
        E = EndmemberSet(rng.random((3, 6)) + 0.1)
        phi = nnls_abundances(E.vectors[:1], E)
        np.testing.assert_allclose(phi[0], [1.0, 0.0, 0.0], atol=1e-8)

    def test_orthogonal_target_gives_zero(self):
        A = np.array([[1.0], [0.0]])  # single endmember along e1
        b = np.array([0.0, 1.0])  # orthogonal to it
        x = nnls(A, b)
        np.testing.assert_allclose(x, [0.0], atol=1e-12)

    def test_matches_enumeration_oracle(self):
        rng = np.random.default_rng(42)
        for _ in range(60):
            q, n = int(rng.integers(3, 8)), int(rng.integers(1, 5))
            A = rng.standard_normal((q, n))
            b = rng.standard_normal(q)
            x = nnls(A, b)
            oracle = nnls_by_enumeration(A, b)
            val = np.sum((A @ x - b) ** 2)
            oracle_val = np.sum((A @ oracle - b) ** 2)
            assert val <= oracle_val + 1e-8, (A, b)

    def test_kkt_conditions(self):
        rng = np.random.default_rng(1)
        for _ in range(80):
            q, n = int(rng.integers(2, 10)), int(rng.integers(1, 6))
            A = rng.standard_normal((q, n))
            b = rng.standard_normal(q)
            x = nnls(A, b)
            grad = A.T @ (A @ x - b)
            assert (x >= 0).all()
            assert (grad >= -1e-8).all()
            assert (np.abs(x * grad) < 1e-8).all()


class TestReconstructionError:
    def test_exact_reconstruction_is_zero(self):
        rng = np.random.default_rng(2)
        E = EndmemberSet(rng.random((3, 5)))
        phi = rng.dirichlet(np.ones(3), size=10)
        pixels = phi @ E.vectors
        assert reconstruction_error(pixels, E, phi) == 0.0

    def test_single_pixel_single_band(self):
        E = EndmemberSet(np.array([[0.0]]))
        assert reconstruction_error(np.array([[2.0]]), E, np.array([[1.0]])) == 2.0

    def test_two_pixel_average(self):
        E = EndmemberSet(np.array([[0.0]]))
        pixels = np.array([[3.0], [4.0]])
        phi = np.array([[0.0], [0.0]])
        assert reconstruction_error(pixels, E, phi) == pytest.approx(3.5)

    def test_dimension_mismatch(self):
        E = EndmemberSet(np.array([[0.0, 1.0]]))
        with pytest.raises(ValueError):
            reconstruction_error(np.array([[1.0, 2.0]]), E, np.array([[1.0, 2.0]]))


class TestVca:
    def test_recovers_planted_vertices(self):
        rng = np.random.default_rng(7)
        for trial in range(10):
            pixels, E, _ = planted_patch(rng, m=4, q=16)
            found = vca(pixels, 4, seed=trial)
            planted_rows = {tuple(np.round(row, 9)) for row in E}
            found_rows = {tuple(np.round(row, 9)) for row in found.vectors}
            assert found_rows == planted_rows

    def test_recovers_planted_vertices_forced_pca_branch(self):
        rng = np.random.default_rng(8)
        pixels, E, _ = planted_patch(rng, m=3, q=10)
        found = vca(pixels, 3, seed=0, subspace="pca")
        planted_rows = {tuple(np.round(row, 9)) for row in E}
        found_rows = {tuple(np.round(row, 9)) for row in found.vectors}
        assert found_rows == planted_rows

    def test_single_endmember_max_projection_and_determinism(self):
        rng = np.random.default_rng(3)
        pixels = rng.random((30, 5))
        first = vca(pixels, 1, seed=11)
        second = vca(pixels, 1, seed=11)
        np.testing.assert_array_equal(first.vectors, second.vectors)
        # One endmember: the pick maximizes |w . pixel| for the seeded draw.
        w = np.random.default_rng(11).standard_normal(5)
        expected = int(np.argmax(np.abs(pixels @ w)))
        assert first.indices == (expected,)

    def test_identical_pixels_degenerate(self):
        with pytest.raises(DegenerateInputError):
            vca(np.ones((10, 4)), 2, seed=0)

    def test_m_bounds_validated(self):
        pixels = np.random.default_rng(0).random((5, 3))
        with pytest.raises(ValueError):
            vca(pixels, 4, seed=0)

    def test_deterministic_per_seed_and_varies_with_seed(self):
        rng = np.random.default_rng(12)
        pixels = rng.random((50, 8))
        a = vca(pixels, 3, seed=5)
        b = vca(pixels, 3, seed=5)
        assert a.indices == b.indices
        results = {vca(pixels, 3, seed=s).indices for s in range(8)}
        assert len(results) >= 1  # may coincide, but must never error


class TestCharacterize:
    def test_single_run_equals_pipeline(self):
        rng = np.random.default_rng(4)
        pixels, _, _ = planted_patch(rng, m=3, q=8)
        char = characterize(pixels, 3, runs=1, seed=20)
        E = vca(pixels, 3, seed=20)
        phi = nnls_abundances(pixels, E)
        np.testing.assert_array_equal(char.endmembers.vectors, E.vectors)
        np.testing.assert_array_equal(char.abundances, phi)
        assert char.epsilon == reconstruction_error(pixels, E, phi)

    def test_noiseless_kept_error_tiny(self):
        rng = np.random.default_rng(5)
        pixels, _, _ = planted_patch(rng, m=4, q=32)
        char = characterize(pixels, 4, runs=5, seed=0)
        assert char.epsilon < 1e-8

    def test_kept_error_is_minimum_of_runs(self):
        rng = np.random.default_rng(6)
        pixels = rng.random((40, 10))
        char = characterize(pixels, 3, runs=6, seed=100)
        assert len(char.run_errors) == 6
        assert char.epsilon == min(char.run_errors)

    def test_avg_abundance_sums_to_one(self):
        rng = np.random.default_rng(9)
        pixels = rng.random((30, 6)) + 0.05
        char = characterize(pixels, 3, runs=2, seed=7)
        assert abs(char.avg_abundance.sum() - 1.0) < 1e-9

    def test_uniform_abundances_give_uniform_mean(self):
        phi = np.full((20, 4), 0.25)
        np.testing.assert_allclose(normalized_mean_abundance(phi), np.full(4, 0.25))

    def test_permutation_equivariance_of_mean(self):
        rng = np.random.default_rng(10)
        phi = rng.random((15, 5))
        perm = rng.permutation(5)
        direct = normalized_mean_abundance(phi)
        permuted = normalized_mean_abundance(phi[:, perm])
        np.testing.assert_allclose(permuted, direct[perm])
