import numpy as np
import pytest

from graphit.graphs import erdos_renyi, normalized_laplacian
from graphit.spectral import (ConvergenceError, matrix_function, matrix_power,
                              symmetric_eig)

SQ2 = 1.0 / np.sqrt(2.0)


class TestSymmetricEig:
    def test_identity(self):
        e = symmetric_eig(np.eye(3))
        assert np.allclose(e.eigenvalues, [1, 1, 1], atol=0)

    def test_hand_2x2(self):
        e = symmetric_eig(np.array([[1.0, -1.0], [-1.0, 1.0]]))
        assert np.allclose(e.eigenvalues, [0.0, 2.0], atol=1e-12)
        # eigenvectors up to sign; the solver's convention makes the
        # largest-magnitude entry positive
        assert np.allclose(np.abs(e.eigenvectors[:, 0]), [SQ2, SQ2], atol=1e-12)
        assert np.allclose(np.abs(e.eigenvectors[:, 1]), [SQ2, SQ2], atol=1e-12)
        assert e.eigenvectors[0, 0] > 0 and e.eigenvectors[0, 1] > 0

    def test_diagonal_sorted(self):
        e = symmetric_eig(np.diag([3.0, 1.0, 2.0]))
        assert np.allclose(e.eigenvalues, [1, 2, 3], atol=0)

    def test_roundtrip_200_random(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            n = int(rng.integers(2, 51))
            m = rng.standard_normal((n, n))
            m = 0.5 * (m + m.T)
            e = symmetric_eig(m)
            scale = max(1.0, float(np.max(np.abs(m))))
            assert np.max(np.abs(e.reconstruct() - m)) < 1e-9 * scale
            vtv = e.eigenvectors.T @ e.eigenvectors
            assert np.max(np.abs(vtv - np.eye(n))) < 1e-10

    def test_matches_lapack_eigenvalues(self):
        # independent oracle for the values themselves
        rng = np.random.default_rng(4)
        for _ in range(20):
            n = int(rng.integers(2, 40))
            m = rng.standard_normal((n, n))
            m = 0.5 * (m + m.T)
            mine = symmetric_eig(m).eigenvalues
            ref = np.linalg.eigvalsh(m)
            assert np.max(np.abs(mine - ref)) < 1e-10 * max(1.0, np.abs(ref).max())

    def test_laplacian_spectrum_bounds(self):
        rng = np.random.default_rng(9)
        for _ in range(25):
            g = erdos_renyi(int(rng.integers(2, 21)), 0.3, rng)
            w = symmetric_eig(normalized_laplacian(g)).eigenvalues
            assert w[0] >= -1e-10 and w[-1] <= 2 + 1e-10

    def test_deterministic(self):
        rng = np.random.default_rng(2)
        m = rng.standard_normal((12, 12))
        m = 0.5 * (m + m.T)
        e1 = symmetric_eig(m)
        e2 = symmetric_eig(m)
        assert np.array_equal(e1.eigenvalues, e2.eigenvalues)
        assert np.array_equal(e1.eigenvectors, e2.eigenvectors)

    def test_rejects_non_square(self):
        with pytest.raises(ValueError, match="square"):
            symmetric_eig(np.ones((2, 3)))

    def test_rejects_non_finite(self):
        m = np.eye(2)
        m[0, 1] = np.nan
        with pytest.raises(ValueError, match="finite"):
            symmetric_eig(m)

    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError, match="symmetric"):
            symmetric_eig(np.array([[0.0, 1.0], [0.0, 0.0]]))


class TestMatrixFunction:
    def test_identity_function(self):
        rng = np.random.default_rng(1)
        m = rng.standard_normal((6, 6))
        m = 0.5 * (m + m.T)
        assert np.max(np.abs(matrix_function(m, lambda x: x) - m)) < 1e-10

    def test_exp_closed_form_2x2(self):
        m = np.array([[1.0, -1.0], [-1.0, 1.0]])
        out = matrix_function(m, lambda lam: np.exp(-lam))
        a = (1 + np.exp(-2.0)) / 2
        b = (1 - np.exp(-2.0)) / 2
        assert np.allclose(out, [[a, b], [b, a]], atol=1e-12)
        assert np.allclose(out, [[0.5677, 0.4323], [0.4323, 0.5677]], atol=5e-5)

    def test_zero_function(self):
        m = np.diag([1.0, 2.0])
        assert np.array_equal(matrix_function(m, lambda lam: 0.0 * lam), np.zeros((2, 2)))

    def test_rejects_non_finite_values(self):
        m = np.diag([0.0, 1.0])
        with np.errstate(divide="ignore"), pytest.raises(ValueError, match="non-finite"):
            matrix_function(m, lambda lam: 1.0 / lam)

    def test_output_symmetric(self):
        rng = np.random.default_rng(3)
        m = rng.standard_normal((8, 8))
        m = 0.5 * (m + m.T)
        out = matrix_function(m, np.exp)
        assert np.array_equal(out, out.T)


class TestMatrixPower:
    def test_p1_is_input(self):
        m = np.array([[1.0, 2.0], [3.0, 4.0]])
        assert np.array_equal(matrix_power(m, 1), m)

    def test_projector_idempotent(self):
        m = np.full((2, 2), 0.5)
        assert np.allclose(matrix_power(m, 2), m, atol=1e-15)

    def test_diagonal_cubes(self):
        assert np.array_equal(matrix_power(np.diag([2.0, 3.0]), 3), np.diag([8.0, 27.0]))

    def test_p0_identity(self):
        assert np.array_equal(matrix_power(np.diag([2.0, 3.0]), 0), np.eye(2))

    def test_negative_rejected(self):
        with pytest.raises(ValueError, match="negative"):
            matrix_power(np.eye(2), -1)

    def test_non_integer_rejected(self):
        with pytest.raises(ValueError, match="integer"):
            matrix_power(np.eye(2), 1.5)

    def test_agrees_with_spectral_route(self):
        rng = np.random.default_rng(7)
        for _ in range(10):
            n = int(rng.integers(2, 12))
            m = rng.standard_normal((n, n))
            m = 0.5 * (m + m.T)
            radius = np.max(np.abs(np.linalg.eigvalsh(m)))
            if radius > 2.0:
                m *= 2.0 / radius
            for p in (2, 5, 8):
                direct = matrix_power(m, p)
                spectral = matrix_function(m, lambda lam: lam ** p)
                assert np.max(np.abs(direct - spectral)) < 1e-8
