import io

import numpy as np
import pytest

from graphit.graphs import (Graph, bfs_distances, erdos_renyi,
                            normalized_laplacian, permutation_matrix, permute)
from graphit.kernels import (KernelSpec, adjacency_pe, all_ones_kernel,
                             apply_zero_diagonal, build_kernel,
                             diffusion_kernel, laplacian_pe, p_step_rw_kernel,
                             read_kernel_dump, write_kernel_dump)
from graphit.spectral import matrix_power

SQ2 = 1.0 / np.sqrt(2.0)


def random_tree(n, rng):
    # attach node i to a uniformly random earlier node
    edges = tuple((int(rng.integers(0, i)), i) for i in range(1, n))
    return Graph(n, edges, (0,) * n)


class TestDiffusion:
    def test_single_node(self, single):
        assert diffusion_kernel(single, 1.0).values.tolist() == [[1.0]]

    def test_p2_closed_form(self, p2):
        a = (1 + np.exp(-2.0)) / 2
        b = (1 - np.exp(-2.0)) / 2
        assert np.allclose(diffusion_kernel(p2, 1.0).values, [[a, b], [b, a]], atol=1e-12)

    def test_k3_closed_form(self, k3):
        # normalized Laplacian spectrum of K3 is {0, 3/2, 3/2}, so
        # K = (1/3) J + exp(-3/2) (I - J/3)
        j = np.ones((3, 3))
        expected = j / 3 + np.exp(-1.5) * (np.eye(3) - j / 3)
        assert np.allclose(diffusion_kernel(k3, 1.0).values, expected, atol=1e-12)
        vals = diffusion_kernel(k3, 1.0).values
        assert abs(vals[0, 0] - 0.4821) < 5e-5
        assert abs(vals[0, 1] - 0.2590) < 5e-5

    def test_entries_nonnegative(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            g = erdos_renyi(int(rng.integers(2, 15)), 0.3, rng)
            assert diffusion_kernel(g, 1.0).values.min() >= -1e-12

    def test_rejects_bad_beta(self, p2):
        with pytest.raises(ValueError, match="beta"):
            diffusion_kernel(p2, 0.0)


class TestPStepWalk:
    def test_p2_one_step_gamma_one_is_adjacency(self, p2):
        assert np.allclose(p_step_rw_kernel(p2, 1, 1.0).values, [[0, 1], [1, 0]], atol=1e-15)

    def test_p2_two_step_half(self, p2):
        assert np.allclose(p_step_rw_kernel(p2, 2, 0.5).values,
                           [[0.5, 0.5], [0.5, 0.5]], atol=1e-15)

    def test_single_node(self, single):
        assert p_step_rw_kernel(single, 3, 0.7).values.tolist() == [[1.0]]

    def test_locality_exact_on_trees(self):
        rng = np.random.default_rng(6)
        for _ in range(10):
            n = int(rng.integers(3, 13))
            g = random_tree(n, rng)
            for p in (1, 2, 3):
                k = p_step_rw_kernel(g, p, 0.5).values
                dist = np.array([bfs_distances(g, u) for u in range(n)])
                assert np.array_equal(k != 0.0, dist <= p)

    def test_matches_spectral_route(self, k3):
        lap = normalized_laplacian(k3)
        direct = p_step_rw_kernel(k3, 3, 0.5).values
        from graphit.spectral import matrix_function
        spectral = matrix_function(lap, lambda lam: (1 - 0.5 * lam) ** 3)
        assert np.max(np.abs(direct - spectral)) < 1e-12


class TestAdjacencyPE:
    def test_p2_not_psd(self, p2):
        k = adjacency_pe(p2)
        assert np.allclose(k.values, [[0, 1], [1, 0]], atol=0)
        w = np.linalg.eigvalsh(k.values)
        assert np.allclose(w, [-1.0, 1.0], atol=1e-12)

    def test_k3(self, k3):
        expected = (np.ones((3, 3)) - np.eye(3)) / 2
        assert np.allclose(adjacency_pe(k3).values, expected, atol=1e-15)

    def test_isolated_node_row_zero(self):
        g = Graph(3, ((0, 1),), (0, 0, 0))
        k = adjacency_pe(g).values
        assert np.array_equal(k[2], np.zeros(3))
        assert np.array_equal(k[:, 2], np.zeros(3))

    def test_equals_one_step_walk_without_isolated_nodes(self):
        rng = np.random.default_rng(8)
        count = 0
        while count < 10:
            g = erdos_renyi(int(rng.integers(2, 15)), 0.5, rng)
            from graphit.graphs import degree_vector
            if degree_vector(g).min() == 0:
                continue
            count += 1
            diff = adjacency_pe(g).values - p_step_rw_kernel(g, 1, 1.0).values
            assert np.max(np.abs(diff)) < 1e-12


class TestZeroDiagonal:
    def test_identity_kernel_becomes_zero(self):
        from graphit.kernels import KernelMatrix
        ident = KernelMatrix(KernelSpec.all_ones(), np.eye(3))
        assert np.array_equal(apply_zero_diagonal(ident).values, np.zeros((3, 3)))

    def test_p2_diffusion(self, p2):
        b = (1 - np.exp(-2.0)) / 2
        k = apply_zero_diagonal(diffusion_kernel(p2, 1.0))
        assert np.allclose(k.values, [[0, b], [b, 0]], atol=1e-12)
        assert k.spec.zero_diagonal

    def test_adjacency_unchanged(self, k3):
        k = adjacency_pe(k3)
        assert np.array_equal(apply_zero_diagonal(k).values, k.values)


class TestLaplacianPE:
    def test_p3_single_column(self, p3):
        pe = laplacian_pe(p3, 1)
        assert pe.shape == (3, 1)
        assert np.allclose(np.abs(pe[:, 0]), [SQ2, 0.0, SQ2], atol=1e-10)
        # sign convention: leading largest-magnitude entry positive
        assert pe[0, 0] > 0 and pe[2, 0] < 0

    def test_single_node_zero_padded(self, single):
        assert np.array_equal(laplacian_pe(single, 2), np.zeros((1, 2)))

    def test_p2(self, p2):
        pe = laplacian_pe(p2, 1)
        assert np.allclose(np.abs(pe[:, 0]), [SQ2, SQ2], atol=1e-12)
        assert pe[0, 0] > 0 > pe[1, 0]

    def test_columns_satisfy_eigen_equation(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            g = erdos_renyi(int(rng.integers(3, 12)), 0.5, rng)
            lap = normalized_laplacian(g)
            w = np.linalg.eigvalsh(lap)
            k = min(3, g.n - 1)
            pe = laplacian_pe(g, k)
            for j in range(k):
                lam = w[1 + j]
                assert np.linalg.norm(lap @ pe[:, j] - lam * pe[:, j]) < 1e-8

    def test_orthonormal_when_gaps_simple(self):
        rng = np.random.default_rng(12)
        checked = 0
        while checked < 5:
            g = erdos_renyi(int(rng.integers(4, 10)), 0.5, rng)
            w = np.linalg.eigvalsh(normalized_laplacian(g))
            if np.min(np.diff(w)) < 1e-6:
                continue
            checked += 1
            pe = laplacian_pe(g, g.n - 1)
            gram = pe.T @ pe
            assert np.max(np.abs(gram - np.eye(g.n - 1))) < 1e-9

    def test_rejects_bad_k(self, p2):
        with pytest.raises(ValueError, match=">= 1"):
            laplacian_pe(p2, 0)


class TestKernelProperties:
    def test_psd_families_on_random_graphs(self):
        rng = np.random.default_rng(42)
        for _ in range(30):
            g = erdos_renyi(int(rng.integers(3, 21)), 0.3, rng)
            for spec in (KernelSpec.diffusion(1.0), KernelSpec.p_step(2, 0.5)):
                w = np.linalg.eigvalsh(build_kernel(g, spec).values)
                assert w.min() >= -1e-8

    def test_diffusion_limit_error_halves(self):
        rng = np.random.default_rng(10)
        g = erdos_renyi(10, 0.4, rng)
        lap = normalized_laplacian(g)
        dense = diffusion_kernel(g, 1.0).values

        def err(p):
            return np.linalg.norm(matrix_power(np.eye(10) - lap / p, p) - dense)

        assert 0.4 <= err(128) / err(64) <= 0.6

    def test_permutation_consistency_all_families(self):
        rng = np.random.default_rng(17)
        specs = (KernelSpec.diffusion(1.0), KernelSpec.p_step(2, 0.5),
                 KernelSpec.p_step(3, 0.5), KernelSpec.adjacency(),
                 KernelSpec.all_ones())
        for _ in range(5):
            g = erdos_renyi(int(rng.integers(3, 12)), 0.4, rng)
            perm = list(rng.permutation(g.n))
            p = permutation_matrix(perm)
            gp = permute(g, perm)
            for spec in specs:
                lhs = build_kernel(gp, spec).values
                rhs = p @ build_kernel(g, spec).values @ p.T
                assert np.max(np.abs(lhs - rhs)) < 1e-10

    def test_kernel_matrices_symmetric(self):
        rng = np.random.default_rng(19)
        g = erdos_renyi(12, 0.4, rng)
        for spec in (KernelSpec.diffusion(0.7), KernelSpec.p_step(3, 0.4),
                     KernelSpec.adjacency()):
            v = build_kernel(g, spec).values
            assert np.max(np.abs(v - v.T)) < 1e-10


class TestSpecValidation:
    def test_bad_family(self):
        with pytest.raises(ValueError, match="family"):
            KernelSpec("heat")

    def test_bad_gamma(self):
        with pytest.raises(ValueError, match="gamma"):
            KernelSpec.p_step(2, 1.5)

    def test_bad_p(self):
        with pytest.raises(ValueError, match="p >= 1"):
            KernelSpec.p_step(0, 0.5)


def test_dump_round_trip(k3):
    k = diffusion_kernel(k3, 1.25)
    buf = io.StringIO()
    write_kernel_dump(k, buf)
    buf.seek(0)
    back = read_kernel_dump(buf)
    assert back.spec == k.spec
    assert np.array_equal(back.values, k.values)


def test_dump_header_readable(p2):
    buf = io.StringIO()
    write_kernel_dump(apply_zero_diagonal(adjacency_pe(p2)), buf)
    header = buf.getvalue().splitlines()[0]
    assert "n=2" in header and "family=adjacency" in header and "zero_diagonal=1" in header
