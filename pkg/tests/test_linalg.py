"""Core linear algebra: PCA flats, truncated SVD, k-means, matching."""

import itertools

import numpy as np
import pytest
import scipy.cluster.vq

from fls.errors import DegenerateInput, InvalidParam, RankDeficient
from fls.linalg import (
    AffineFlat,
    flip_signs,
    hungarian_match,
    kmeans,
    moment_spectrum,
    pca_fit,
    pca_spectrum,
    truncated_svd,
    truncated_svd_power,
)

from conftest import random_orthonormal


def flat_residual_sq(points, flat):
    diff = points - flat.base
    proj = diff @ flat.basis
    return float((diff**2).sum() - (proj**2).sum())


class TestAffineFlat:
    def test_orthonormality_enforced(self, rng):
        with pytest.raises(InvalidParam):
            AffineFlat(base=np.zeros(3), basis=rng.standard_normal((3, 2)))

    def test_valid_construction(self, rng):
        b = random_orthonormal(rng, 5, 2)
        flat = AffineFlat(base=np.ones(5), basis=b)
        assert flat.dim == 2
        assert flat.ambient == 5

    def test_dimension_mismatch(self, rng):
        with pytest.raises(InvalidParam):
            AffineFlat(base=np.zeros(4), basis=random_orthonormal(rng, 5, 2))


class TestPcaFit:
    def test_points_exactly_on_flat(self, rng):
        # 10 points on a 2-flat in R^5: residual must vanish
        basis = random_orthonormal(rng, 5, 2)
        base = rng.standard_normal(5)
        pts = base + rng.standard_normal((10, 2)) @ basis.T
        flat = pca_fit(pts, 2)
        assert flat_residual_sq(pts, flat) < 1e-16

    def test_full_dimension_zero_residual(self, rng):
        pts = rng.standard_normal((20, 3))
        flat = pca_fit(pts, 3)
        assert flat_residual_sq(pts, flat) < 1e-12
        # basis spans all of R^3
        assert np.allclose(flat.basis @ flat.basis.T, np.eye(3), atol=1e-10)

    def test_residual_matches_covariance_eigensolve(self, rng):
        # independent oracle: eigendecomposition of the centered scatter
        pts = rng.standard_normal((50, 4))
        flat = pca_fit(pts, 2)
        centered = pts - pts.mean(axis=0)
        eigvals = np.linalg.eigvalsh(centered.T @ centered)
        expected = eigvals[:2].sum()  # trailing two, ascending order
        got = flat_residual_sq(pts, flat)
        assert abs(got - expected) <= 1e-8 * max(1.0, abs(expected))

    def test_orthonormal_basis(self, rng):
        flat = pca_fit(rng.standard_normal((30, 6)), 3)
        assert np.allclose(flat.basis.T @ flat.basis, np.eye(3), atol=1e-10)

    def test_beats_random_competitor_flats(self, rng):
        pts = rng.standard_normal((40, 5))
        flat = pca_fit(pts, 2)
        best = flat_residual_sq(pts, flat)
        centroid = pts.mean(axis=0)
        for _ in range(100):
            competitor = AffineFlat(base=centroid, basis=random_orthonormal(rng, 5, 2))
            assert best <= flat_residual_sq(pts, competitor) + 1e-9

    def test_too_few_points(self, rng):
        with pytest.raises(DegenerateInput):
            pca_fit(rng.standard_normal((2, 4)), 2)

    def test_bad_dims(self, rng):
        with pytest.raises(InvalidParam):
            pca_fit(rng.standard_normal((10, 4)), 0)
        with pytest.raises(InvalidParam):
            pca_fit(rng.standard_normal((10, 4)), 5)


class TestSpectra:
    def test_pca_spectrum_matches_scatter(self, rng):
        pts = rng.standard_normal((25, 4))
        centroid, eigvals, eigvecs = pca_spectrum(pts)
        centered = pts - pts.mean(axis=0)
        oracle = np.linalg.eigvalsh(centered.T @ centered)[::-1]
        assert np.allclose(centroid, pts.mean(axis=0))
        assert np.allclose(eigvals, oracle, atol=1e-8)

    def test_moment_spectrum_is_uncentered(self, rng):
        pts = rng.standard_normal((25, 4)) + 3.0
        eigvals, eigvecs = moment_spectrum(pts)
        oracle = np.linalg.eigvalsh(pts.T @ pts)[::-1]
        assert np.allclose(eigvals, oracle, atol=1e-8)
        # trailing eigenvalues = residual of the best linear subspace
        resid = (pts**2).sum() - ((pts @ eigvecs[:, :2]) ** 2).sum()
        assert abs(resid - eigvals[2:].sum()) < 1e-8

    def test_spectrum_padding_when_few_points(self, rng):
        eigvals, _ = moment_spectrum(rng.standard_normal((3, 6)))
        assert eigvals.shape == (6,)
        assert np.all(eigvals[3:] == 0.0)


class TestTruncatedSvd:
    def test_diagonal(self):
        res = truncated_svd(np.diag([3.0, 2.0, 1.0]), 2)
        assert np.allclose(res.singular_values, [3.0, 2.0])

    def test_orthonormal_rows_give_unit_singular_values(self, rng):
        a = random_orthonormal(rng, 12, 4).T  # 4x12 with orthonormal rows
        res = truncated_svd(a, 4)
        assert np.allclose(res.singular_values, np.ones(4), atol=1e-10)

    def test_matches_full_svd_oracle(self, rng):
        a = rng.standard_normal((8, 20))
        res = truncated_svd(a, 3)
        u, s, vt = np.linalg.svd(a, full_matrices=False)
        assert np.allclose(res.singular_values, s[:3], atol=1e-8)
        # the shared sign convention makes columns directly comparable
        assert np.allclose(res.right_vectors, flip_signs(vt[:3].T), atol=1e-8)
        assert np.allclose(np.abs(res.left_vectors), np.abs(u[:, :3]), atol=1e-8)

    def test_triple_identity(self, rng):
        a = rng.standard_normal((6, 15))
        res = truncated_svd(a, 4)
        s1 = res.singular_values[0]
        for i in range(4):
            lhs = a @ res.right_vectors[:, i]
            rhs = res.singular_values[i] * res.left_vectors[:, i]
            assert np.linalg.norm(lhs - rhs) <= 1e-6 * s1

    def test_orthonormal_outputs(self, rng):
        res = truncated_svd(rng.standard_normal((7, 11)), 3)
        assert np.allclose(res.right_vectors.T @ res.right_vectors, np.eye(3), atol=1e-8)
        assert np.allclose(res.left_vectors.T @ res.left_vectors, np.eye(3), atol=1e-8)

    def test_rank_deficient(self):
        # s2/s1 = 1e-13, below the 1e-12 relative cutoff
        with pytest.raises(RankDeficient):
            truncated_svd(np.diag([1.0, 1e-13]), 2)
        with pytest.raises(RankDeficient):
            truncated_svd(np.zeros((3, 4)), 1)

    def test_k_too_large(self, rng):
        with pytest.raises(InvalidParam):
            truncated_svd(rng.standard_normal((4, 10)), 5)

    def test_power_path_matches_gram_path(self, rng):
        # known spectrum with a gap below the requested block (s3=3 vs s4=1)
        u = random_orthonormal(rng, 10, 6)
        v = random_orthonormal(rng, 40, 6)
        a = u @ np.diag([7.0, 5.0, 3.0, 1.0, 0.5, 0.25]) @ v.T
        gram = truncated_svd(a, 3)
        power = truncated_svd_power(a, 3, seed=7)
        assert np.allclose(power.singular_values, gram.singular_values, atol=1e-7)
        assert np.allclose(power.right_vectors, gram.right_vectors, atol=1e-5)

    def test_power_path_rank_deficient(self):
        with pytest.raises(RankDeficient):
            truncated_svd_power(np.diag([1.0, 1e-13]), 2, seed=0)


class TestKmeans:
    def test_duplicate_pairs(self):
        pts = np.array([[0.0, 0.0], [0.0, 0.0], [9.0, 9.0], [9.0, 9.0]])
        labels, centers, inertia = kmeans(pts, 2, seed=0)
        assert labels[0] == labels[1]
        assert labels[2] == labels[3]
        assert labels[0] != labels[2]
        assert inertia < 1e-12

    def test_m_equals_k(self, rng):
        pts = rng.standard_normal((4, 3)) * 10
        labels, centers, inertia = kmeans(pts, 4, seed=1)
        assert sorted(labels) == [0, 1, 2, 3]
        assert inertia < 1e-12

    def test_against_multi_restart_oracle(self, rng):
        pts = rng.standard_normal((30, 2))
        pts[10:20] += [6, 0]
        pts[20:] += [0, 6]
        _, _, inertia = kmeans(pts, 3, seed=0, restarts=5)

        # independent oracle: best of 200 scipy kmeans2 runs
        best = np.inf
        for trial in range(200):
            _, lab = scipy.cluster.vq.kmeans2(
                pts, 3, minit="++", seed=trial, missing="warn"
            )
            cost = sum(
                ((pts[lab == j] - pts[lab == j].mean(axis=0)) ** 2).sum()
                for j in np.unique(lab)
            )
            best = min(best, cost)
        assert inertia <= best * 1.05 + 1e-12

    def test_labels_are_nearest_centroid(self, rng):
        pts = rng.standard_normal((50, 3))
        labels, centers, _ = kmeans(pts, 4, seed=3)
        d2 = ((pts[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        assert np.array_equal(labels, d2.argmin(axis=1))

    def test_converged_continuation(self, rng):
        pts = rng.standard_normal((60, 2))
        labels, centers, inertia = kmeans(pts, 3, seed=5)
        # ten more Lloyd steps from the returned state change nothing material
        c = centers.copy()
        for _ in range(10):
            d2 = ((pts[:, None, :] - c[None, :, :]) ** 2).sum(axis=2)
            lab = d2.argmin(axis=1)
            for j in range(3):
                if np.any(lab == j):
                    c[j] = pts[lab == j].mean(axis=0)
        d2 = ((pts[:, None, :] - c[None, :, :]) ** 2).sum(axis=2)
        cont = float(d2.min(axis=1).sum())
        assert cont <= inertia + 1e-12
        assert inertia - cont <= 1e-4 * max(inertia, 1e-12)

    def test_deterministic(self, rng):
        pts = rng.standard_normal((40, 2))
        a = kmeans(pts, 3, seed=11)
        b = kmeans(pts, 3, seed=11)
        assert np.array_equal(a[0], b[0])
        assert np.allclose(a[1], b[1])

    def test_k_larger_than_m(self, rng):
        with pytest.raises(DegenerateInput):
            kmeans(rng.standard_normal((3, 2)), 4, seed=0)


class TestHungarianMatch:
    def test_identity(self):
        perm = hungarian_match(np.diag([5, 4, 3]))
        assert list(perm) == [0, 1, 2]

    def test_antidiagonal(self):
        c = np.array([[0, 0, 7], [0, 6, 0], [5, 0, 0]])
        perm = hungarian_match(c)
        assert list(perm) == [2, 1, 0]

    def test_matches_brute_force(self, rng):
        for _ in range(50):
            c = rng.integers(0, 20, size=(4, 4))
            perm = hungarian_match(c)
            # oracle: exhaustive search, ties to lexicographically smallest
            best = max(
                itertools.permutations(range(4)),
                key=lambda p: (sum(c[i, p[i]] for i in range(4)), [-x for x in p]),
            )
            score = sum(c[i, perm[i]] for i in range(4))
            best_score = sum(c[i, best[i]] for i in range(4))
            assert score == best_score
            assert list(perm) == list(best)

    def test_beats_random_permutations(self, rng):
        c = rng.integers(0, 50, size=(6, 6))
        perm = hungarian_match(c)
        score = sum(c[i, perm[i]] for i in range(6))
        for _ in range(1000):
            p = rng.permutation(6)
            assert score >= sum(c[i, p[i]] for i in range(6))

    def test_rejects_nonsquare(self):
        with pytest.raises(InvalidParam):
            hungarian_match(np.ones((2, 3)))

    def test_rejects_negative(self):
        with pytest.raises(InvalidParam):
            hungarian_match(np.array([[1, -1], [0, 2]]))
