import math

import numpy as np
import pytest

from aldlab import KnnError, knn_distances, knn_kl


def quadratic_scan_knn(points, queries, k, exclude_self=False):
    """Independent O(n*m) oracle: explicit loops, full sort."""
    out = np.empty((len(queries), k))
    for qi, q in enumerate(queries):
        dists = []
        for pi, p in enumerate(points):
            if exclude_self and pi == qi:
                continue
            dists.append(math.sqrt(float(np.sum((q - p) ** 2))))
        dists.sort()
        out[qi] = dists[:k]
    return out


class TestKnnDistances:
    def test_two_points(self):
        pts = np.array([[0.0], [1.0]])
        out = knn_distances(pts, pts, 1, exclude_self=True)
        np.testing.assert_allclose(out, [[1.0], [1.0]])

    def test_collinear(self):
        pts = np.array([[0.0], [1.0], [3.0]])
        out = knn_distances(pts, np.array([[0.0]]), 2)
        np.testing.assert_allclose(out, [[0.0, 1.0]])
        out = knn_distances(pts[1:], np.array([[0.0]]), 2)
        np.testing.assert_allclose(out, [[1.0, 3.0]])

    def test_matches_quadratic_scan_exactly(self, rng):
        pts = rng.normal(size=(50, 4))
        qry = rng.normal(size=(20, 4))
        fast = knn_distances(pts, qry, 5)
        slow = quadratic_scan_knn(pts, qry, 5)
        np.testing.assert_array_equal(fast, slow)

    def test_exclude_self_matches_oracle(self, rng):
        pts = rng.normal(size=(40, 3))
        fast = knn_distances(pts, pts, 4, exclude_self=True)
        slow = quadratic_scan_knn(pts, pts, 4, exclude_self=True)
        np.testing.assert_array_equal(fast, slow)

    def test_many_random_instances_exact(self, rng):
        for _ in range(100):
            n = int(rng.integers(5, 30))
            d = int(rng.integers(1, 5))
            k = int(rng.integers(1, n))
            pts = rng.normal(size=(n, d))
            fast = knn_distances(pts, pts, k, exclude_self=True)
            slow = quadratic_scan_knn(pts, pts, k, exclude_self=True)
            np.testing.assert_array_equal(fast, slow)

    def test_k_too_large(self, rng):
        pts = rng.normal(size=(5, 2))
        with pytest.raises(KnnError):
            knn_distances(pts, pts, 5, exclude_self=True)
        knn_distances(pts, pts, 5)  # without exclusion 5 neighbors exist


class TestKnnKl:
    def test_same_law_near_zero(self):
        vals = []
        for seed in range(10):
            r = np.random.default_rng([seed, 11])
            P = r.normal(size=(2500, 1))
            Q = r.normal(size=(2500, 1))
            vals.append(knn_kl(P, Q, 20).value)
        assert abs(float(np.mean(vals))) < 0.05

    def test_shifted_gaussian_near_half(self):
        # KL(N(0,1) || N(1,1)) = 0.5 exactly
        vals = []
        for seed in range(10):
            r = np.random.default_rng([seed, 12])
            P = r.normal(size=(2500, 1))
            Q = r.normal(size=(2500, 1)) + 1.0
            vals.append(knn_kl(P, Q, 20).value)
        assert abs(float(np.mean(vals)) - 0.5) < 0.1

    def test_permutation_invariance(self, rng):
        P = rng.normal(size=(300, 2))
        Q = rng.normal(size=(400, 2)) + 0.3
        base = knn_kl(P, Q, 7).value
        perm = np.random.default_rng(1).permutation(300)
        permq = np.random.default_rng(2).permutation(400)
        assert knn_kl(P[perm], Q[permq], 7).value == pytest.approx(base, rel=1e-12)

    def test_translation_invariance(self, rng):
        P = rng.normal(size=(300, 3))
        Q = rng.normal(size=(300, 3)) + 0.5
        shift = np.array([10.0, -4.0, 2.5])
        a = knn_kl(P, Q, 5).value
        b = knn_kl(P + shift, Q + shift, 5).value
        assert b == pytest.approx(a, rel=1e-9)

    def test_jittered_self_comparison_clamps(self, rng):
        P = rng.normal(size=(200, 2))
        Q = P + 1e-9 * rng.normal(size=(200, 2))
        est = knn_kl(P, Q, 1)
        assert np.isfinite(est.value)
        assert est.clamped_pairs == 0
        # exact duplicates exercise the clamp counter
        est2 = knn_kl(P, np.vstack([P, P]), 1)
        assert est2.clamped_pairs >= 200
        assert np.isfinite(est2.value)

    def test_estimate_fields(self, rng):
        P = rng.normal(size=(100, 3))
        Q = rng.normal(size=(120, 3))
        est = knn_kl(P, Q, 4)
        assert (est.k, est.n, est.m, est.dim) == (4, 100, 120, 3)

    def test_input_validation(self, rng):
        P = rng.normal(size=(50, 2))
        Q = rng.normal(size=(50, 2))
        with pytest.raises(KnnError):
            knn_kl(P, Q, 0)
        with pytest.raises(KnnError):
            knn_kl(P, Q, 50)  # k must be < n
        with pytest.raises(KnnError):
            knn_kl(P, Q[:, :1], 5)
        with pytest.raises(KnnError):
            knn_kl(P, Q[:3], 5)  # k > m
        bad = P.copy()
        bad[0, 0] = np.nan
        with pytest.raises(KnnError):
            knn_kl(bad, Q, 5)

    def test_formula_small_instance(self):
        # hand-checkable 1-d instance
        P = np.array([[0.0], [1.0], [3.0]])
        Q = np.array([[0.5], [2.0]])
        # k=1: rho = |to nearest other P| = [1, 1, 2]; nu = |to nearest Q| = [0.5, 0.5, 1]
        expected = (1 / 3) * (
            (math.log(0.5) - math.log(1.0))
            + (math.log(0.5) - math.log(1.0))
            + (math.log(1.0) - math.log(2.0))
        ) + math.log(2 / 2)
        est = knn_kl(P, Q, 1)
        assert est.value == pytest.approx(expected, rel=1e-12)
