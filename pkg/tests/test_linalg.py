import numpy as np
import pytest

from gve import (
    ConvergenceError,
    DegenerateBlockError,
    InvalidInputError,
    block_orthonormal_factor,
    build_regularized_design,
    estimate_rip_delta,
    matvec,
    symmetric_eigendecomposition,
    transpose_matvec,
)


def random_orthogonal(rng, n):
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diagonal(r))


class TestMatvec:
    def test_identity(self):
        assert np.array_equal(matvec(np.eye(2), [3.0, -1.0]), [3.0, -1.0])

    def test_hand_example(self):
        a = np.array([[1.0, 2.0], [3.0, 4.0]])
        assert np.array_equal(matvec(a, [1.0, 1.0]), [3.0, 7.0])

    def test_zero_vector(self):
        a = np.arange(12.0).reshape(3, 4)
        assert np.array_equal(matvec(a, np.zeros(4)), np.zeros(3))

    def test_dimension_mismatch(self):
        with pytest.raises(InvalidInputError):
            matvec(np.eye(3), np.ones(4))

    def test_does_not_mutate(self):
        a = np.array([[1.0, 2.0], [3.0, 4.0]])
        v = np.array([1.0, 1.0])
        matvec(a, v)
        assert np.array_equal(a, [[1.0, 2.0], [3.0, 4.0]])
        assert np.array_equal(v, [1.0, 1.0])


class TestTransposeMatvec:
    def test_identity(self):
        u = np.array([2.0, 5.0])
        assert np.array_equal(transpose_matvec(np.eye(2), u), u)

    def test_hand_example(self):
        a = np.array([[1.0, 2.0], [3.0, 4.0]])
        assert np.array_equal(transpose_matvec(a, [1.0, 1.0]), [4.0, 6.0])

    def test_matches_explicit_transpose(self):
        rng = np.random.default_rng(7)
        a = rng.normal(size=(5, 9))
        u = rng.normal(size=5)
        assert np.allclose(transpose_matvec(a, u), a.T @ u, rtol=0, atol=0)

    def test_orthonormal_isometry(self):
        rng = np.random.default_rng(3)
        q = random_orthogonal(rng, 16)
        u = rng.normal(size=16)
        assert abs(
            np.linalg.norm(transpose_matvec(q, u)) - np.linalg.norm(u)
        ) <= 1e-10

    def test_dimension_mismatch(self):
        with pytest.raises(InvalidInputError):
            transpose_matvec(np.eye(3), np.ones(4))


class TestSymmetricEigendecomposition:
    def test_diagonal(self):
        vals, vecs = symmetric_eigendecomposition(np.diag([4.0, 1.0]))
        assert np.allclose(vals, [4.0, 1.0], atol=1e-14)
        assert np.allclose(np.abs(vecs), np.eye(2), atol=1e-14)

    def test_two_by_two(self):
        # char poly (2-x)^2 - 1 = 0 -> x in {3, 1}
        vals, _ = symmetric_eigendecomposition(np.array([[2.0, 1.0], [1.0, 2.0]]))
        assert np.allclose(vals, [3.0, 1.0], atol=1e-12)

    def test_identity(self):
        vals, _ = symmetric_eigendecomposition(np.eye(6))
        assert np.allclose(vals, np.ones(6), atol=0)

    @pytest.mark.parametrize("dim", [2, 3, 8, 32, 128])
    def test_random_residuals(self, dim):
        rng = np.random.default_rng(dim)
        g = rng.normal(size=(dim, dim))
        g = g + g.T
        tol = 1e-10
        vals, vecs = symmetric_eigendecomposition(g, tol=tol)
        norm = np.linalg.norm(g, 2)
        residual = g @ vecs - vecs * vals
        assert np.linalg.norm(residual, axis=0).max() <= tol * norm
        # eigenvector orthonormality and reconstruction
        assert np.abs(vecs.T @ vecs - np.eye(dim)).max() <= 1e-10
        rebuilt = (vecs * vals) @ vecs.T
        assert np.abs(rebuilt - g).max() <= tol * max(1.0, np.abs(g).max())
        assert (np.diff(vals) <= 1e-12).all()

    def test_rejects_asymmetric(self):
        with pytest.raises(InvalidInputError):
            symmetric_eigendecomposition(np.array([[1.0, 2.0], [0.0, 1.0]]))

    def test_convergence_failure_carries_residual(self):
        g = np.array([[2.0, 1.0], [1.0, 2.0]])
        with pytest.raises(ConvergenceError) as excinfo:
            symmetric_eigendecomposition(g, max_sweeps=0)
        assert excinfo.value.residual > 0


class TestBlockOrthonormalFactor:
    def test_orthonormal_block_unchanged(self):
        rng = np.random.default_rng(0)
        q = np.linalg.qr(rng.standard_normal((8, 3)))[0]
        z, sig = block_orthonormal_factor(q)
        assert np.abs(z - q).max() <= 1e-10
        assert np.allclose(sig, np.ones(3), atol=1e-10)

    def test_scaling_removed(self):
        rng = np.random.default_rng(1)
        q = np.linalg.qr(rng.standard_normal((10, 4)))[0]
        z, sig = block_orthonormal_factor(2.5 * q)
        assert np.abs(z - q).max() <= 1e-10
        assert np.allclose(sig, 2.5 * np.ones(4), atol=1e-10)

    def test_gram_square_root_oracle(self):
        rng = np.random.default_rng(2)
        x = rng.normal(size=(8, 2))
        z, sig = block_orthonormal_factor(x)
        assert np.abs(z.T @ z - np.eye(2)).max() <= 1e-10
        w, v = np.linalg.eigh(x.T @ x)
        z_ref = x @ v @ np.diag(w**-0.5) @ v.T
        assert np.abs(z - z_ref).max() <= 1e-10

    def test_singular_values_preserved(self):
        rng = np.random.default_rng(5)
        x = rng.normal(size=(12, 5))
        z, sig = block_orthonormal_factor(x)
        ref = np.linalg.svd(x, compute_uv=False)
        assert np.abs(np.sort(sig)[::-1] - ref).max() <= 1e-8
        cross = np.linalg.svd(z.T @ x, compute_uv=False)
        assert np.abs(cross - ref).max() <= 1e-8

    def test_degenerate_block(self):
        col = np.arange(6.0)
        x = np.column_stack([col, col])
        with pytest.raises(DegenerateBlockError) as excinfo:
            block_orthonormal_factor(x)
        assert excinfo.value.block_index == 0

    def test_wide_block_rejected(self):
        with pytest.raises(InvalidInputError):
            block_orthonormal_factor(np.ones((2, 3)))


class TestBuildRegularizedDesign:
    def test_orthonormal_design_is_fixed_point(self):
        rng = np.random.default_rng(11)
        x = random_orthogonal(rng, 12)
        for width in (2, 3, 5, 12):
            result = build_regularized_design(x, width)
            assert np.abs(result.z - x).max() <= 1e-10

    def test_blocks_match_single_block_factor(self):
        rng = np.random.default_rng(12)
        x = rng.normal(size=(8, 4))
        result = build_regularized_design(x, 2)
        for i in range(2):
            zb, sig = block_orthonormal_factor(x[:, 2 * i : 2 * i + 2])
            assert np.abs(result.z[:, 2 * i : 2 * i + 2] - zb).max() <= 1e-12
            assert np.allclose(result.block_singular_values[i], sig, atol=1e-12)

    def test_round_trip_orthonormality(self):
        rng = np.random.default_rng(13)
        width = 5
        x = rng.normal(size=(25, 20))
        result = build_regularized_design(x, width)
        for i in range(4):
            zb = result.z[:, width * i : width * (i + 1)]
            assert np.abs(zb.T @ zb - np.eye(width)).max() <= 1e-8

    def test_trailing_partial_block(self):
        rng = np.random.default_rng(14)
        x = rng.normal(size=(10, 7))
        result = build_regularized_design(x, 3)
        assert [len(s) for s in result.block_singular_values] == [3, 3, 1]
        tail = result.z[:, 6:]
        assert np.abs(tail.T @ tail - np.eye(1)).max() <= 1e-10

    def test_repeated_column_names_block(self):
        rng = np.random.default_rng(15)
        x = rng.normal(size=(8, 6))
        x[:, 3] = x[:, 2]  # second block of width 2 becomes singular
        with pytest.raises(DegenerateBlockError) as excinfo:
            build_regularized_design(x, 2)
        assert excinfo.value.block_index == 1

    def test_width_bounds(self):
        x = np.random.default_rng(16).normal(size=(4, 8))
        with pytest.raises(InvalidInputError):
            build_regularized_design(x, 5)
        with pytest.raises(InvalidInputError):
            build_regularized_design(x, 0)

    def test_deterministic(self):
        rng = np.random.default_rng(17)
        x = rng.normal(size=(9, 6))
        a = build_regularized_design(x, 2)
        b = build_regularized_design(x, 2)
        assert np.array_equal(a.z, b.z)


class TestEstimateRipDelta:
    def test_orthonormal_is_exact_isometry(self):
        rng = np.random.default_rng(21)
        q = random_orthogonal(rng, 10)
        result = estimate_rip_delta(q, 3, subsets=20, seed=0)
        assert result.delta_lower_bound <= 1e-10

    def test_scaled_identity(self):
        result = estimate_rip_delta(2.0 * np.eye(5), 2, subsets=10, seed=0)
        assert result.delta_lower_bound == pytest.approx(3.0, abs=1e-12)

    def test_deterministic(self):
        rng = np.random.default_rng(22)
        x = rng.normal(size=(10, 30)) / np.sqrt(10)
        a = estimate_rip_delta(x, 4, subsets=25, seed=9)
        b = estimate_rip_delta(x, 4, subsets=25, seed=9)
        assert a == b

    def test_monotone_in_subsets(self):
        rng = np.random.default_rng(23)
        x = rng.normal(size=(10, 30)) / np.sqrt(10)
        deltas = [
            estimate_rip_delta(x, 4, subsets=k, seed=5).delta_lower_bound
            for k in (1, 5, 20, 50)
        ]
        assert deltas == sorted(deltas)

    def test_order_out_of_range(self):
        with pytest.raises(InvalidInputError):
            estimate_rip_delta(np.eye(4), 5, subsets=1, seed=0)
        with pytest.raises(InvalidInputError):
            estimate_rip_delta(np.eye(4), 0, subsets=1, seed=0)
