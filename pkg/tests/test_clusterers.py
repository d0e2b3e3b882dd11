import numpy as np
import pytest

from conftest import make_blobs
from oracles import best_two_partition_sse, fcm_fixed_point
from tests_support import permutation_match

from loadclust.clusterers import (
    ClusteringResult,
    agglomerative,
    centroids_from_labels,
    fcm,
    hardened_labels,
    kmeans,
    spectral,
)
from loadclust.errors import DegenerateGeometryError

LINE4 = np.array([[0.0], [1.0], [9.0], [10.0]])


class TestKmeans:
    def test_saturated_k_equals_n(self):
        X = np.array([[0.0], [2.0], [5.0], [9.0]])
        res = kmeans(X, 4, seed=0)
        assert res.objective == 0.0
        assert sorted(res.centers.ravel()) == sorted(X.ravel())

    def test_line4_matches_exhaustive_oracle(self):
        oracle_sse, oracle_centers = best_two_partition_sse(LINE4)
        res = kmeans(LINE4, 2, restarts=10, seed=0)
        assert res.objective == pytest.approx(oracle_sse, abs=1e-12)
        assert oracle_sse == pytest.approx(1.0, abs=1e-12)
        np.testing.assert_allclose(sorted(res.centers.ravel()), [0.5, 9.5], atol=1e-12)

    def test_uniform_duplication_keeps_centers(self):
        res_a = kmeans(LINE4, 2, restarts=10, seed=1)
        res_b = kmeans(np.vstack([LINE4, LINE4]), 2, restarts=10, seed=2)
        np.testing.assert_allclose(
            sorted(res_a.centers.ravel()), sorted(res_b.centers.ravel()), atol=1e-12
        )

    def test_nearest_own_center_at_convergence(self, blobs3):
        X, _ = blobs3
        res = kmeans(X, 3, seed=3)
        d2 = ((X[:, None, :] - res.centers[None, :, :]) ** 2).sum(-1)
        own = d2[np.arange(len(X)), res.labels]
        assert (own <= d2.min(axis=1) + 1e-9).all()

    def test_deterministic(self, blobs3):
        X, _ = blobs3
        a = kmeans(X, 3, seed=42)
        b = kmeans(X, 3, seed=42)
        np.testing.assert_array_equal(a.labels, b.labels)
        np.testing.assert_array_equal(a.centers, b.centers)

    def test_errors(self):
        with pytest.raises(ValueError):
            kmeans(LINE4, 5, seed=0)  # k > n
        with pytest.raises(ValueError, match="finite"):
            kmeans(np.array([[np.inf], [0.0]]), 2, seed=0)
        with pytest.raises(ValueError):
            kmeans(LINE4, 2, restarts=0, seed=0)


class TestSpectral:
    def test_two_far_groups_exact_components(self):
        X = np.vstack([make_blobs([(0, 0)], per=6, spread=0.2, seed=0)[0],
                       make_blobs([(100, 0)], per=6, spread=0.2, seed=1)[0]])
        res = spectral(X, 2, knn=3, seed=0)
        assert res.extra["graph_components"] == 2
        truth = np.repeat([0, 1], 6)
        assert permutation_match(res.labels, truth)

    def test_identical_points_degenerate(self):
        with pytest.raises(DegenerateGeometryError):
            spectral(np.ones((6, 2)), 2, knn=2, seed=0)

    def test_three_blobs(self, blobs3):
        X, truth = blobs3
        res = spectral(X, 3, knn=5, seed=0)
        assert permutation_match(res.labels, truth)

    def test_more_components_than_k_warns(self):
        X = np.vstack([
            make_blobs([(0, 0)], per=5, spread=0.1, seed=0)[0],
            make_blobs([(50, 0)], per=5, spread=0.1, seed=1)[0],
            make_blobs([(0, 50)], per=5, spread=0.1, seed=2)[0],
        ])
        res = spectral(X, 2, knn=2, seed=0)
        assert res.extra["graph_components"] == 3
        assert any("components" in w for w in res.warnings)

    def test_centers_are_input_space_centroids(self, blobs3):
        X, _ = blobs3
        res = spectral(X, 3, knn=5, seed=0)
        np.testing.assert_allclose(
            res.centers, centroids_from_labels(X, res.labels, 3), atol=1e-12
        )


class TestAgglomerative:
    def test_k_equals_n_singletons(self):
        X = np.array([[0.0], [2.0], [7.0]])
        res = agglomerative(X, k=3)
        assert res.objective == 0.0
        np.testing.assert_allclose(np.sort(res.centers.ravel()), np.sort(X.ravel()))

    def test_line4_hand_ward_costs(self):
        res = agglomerative(LINE4, k=2)
        assert permutation_match(res.labels, [0, 0, 1, 1])
        costs = res.extra["merge_costs"]
        assert costs[0] == pytest.approx(0.5, abs=1e-12)
        assert costs[1] == pytest.approx(0.5, abs=1e-12)
        assert costs[2] >= 32.0

    def test_duplicate_points_merge_first(self):
        X = np.array([[1.0, 1.0], [5.0, 0.0], [1.0, 1.0], [9.0, 3.0]])
        res = agglomerative(X, k=3)
        assert res.extra["merge_costs"][0] == pytest.approx(0.0, abs=1e-15)
        assert res.labels[0] == res.labels[2]

    def test_threshold_target(self):
        res = agglomerative(LINE4, threshold=1.0)
        assert res.k == 2
        assert permutation_match(res.labels, [0, 0, 1, 1])

    def test_trace_nondecreasing_and_matches_scipy(self, blobs3):
        X, _ = blobs3
        res = agglomerative(X, k=3)
        costs = res.extra["merge_costs"]
        assert all(b >= a for a, b in zip(costs, costs[1:]))
        hierarchy = pytest.importorskip("scipy.cluster.hierarchy")
        L = hierarchy.linkage(X, method="ward")
        np.testing.assert_allclose(costs, L[:, 2] ** 2 / 2, rtol=1e-9, atol=1e-12)
        scipy_labels = hierarchy.fcluster(L, t=3, criterion="maxclust")
        assert permutation_match(res.labels, scipy_labels)

    def test_errors(self):
        with pytest.raises(ValueError):
            agglomerative(LINE4, threshold=-0.5)
        with pytest.raises(ValueError):
            agglomerative(LINE4)
        with pytest.raises(ValueError):
            agglomerative(LINE4, k=2, threshold=1.0)


class TestFcm:
    def test_two_points_identity_memberships(self):
        res = fcm(np.array([[0.0], [6.0]]), 2, 2.0, tol=1e-12, seed=4)
        np.testing.assert_allclose(np.sort(res.centers.ravel()), [0.0, 6.0], atol=1e-6)
        # Each point belongs (essentially) fully to its own center.
        for j in range(2):
            nearest = int(np.argmin(np.abs(res.centers.ravel() - j * 6.0)))
            assert res.memberships[j, nearest] == pytest.approx(1.0, abs=1e-6)

    def test_equidistant_point_half_memberships(self):
        res = fcm(np.array([[0.0], [3.0], [6.0]]), 2, 2.0, tol=1e-12, seed=11)
        np.testing.assert_allclose(res.memberships[1], [0.5, 0.5], atol=1e-9)

    def test_zero_three_six_fixed_point_oracle(self):
        # Frozen from the independent direct-iteration oracle (tests/oracles.py):
        # centers (0.6131739785546647, 5.386826021466494), corner membership
        # 0.9872088201179505 to its near center.
        res = fcm(np.array([[0.0], [3.0], [6.0]]), 2, 2.0, tol=1e-12, max_iter=2000, seed=11)
        got = np.sort(res.centers.ravel())
        np.testing.assert_allclose(got, [0.6131739785546647, 5.386826021466494], atol=1e-8)
        oc, ou = fcm_fixed_point(np.array([[0.0], [3.0], [6.0]]), 2, 2.0, [[1.0], [5.0]], iters=3000)
        np.testing.assert_allclose(got, np.sort(oc.ravel()), atol=1e-8)
        low = int(np.argmin(res.centers.ravel()))
        assert res.memberships[0, low] == pytest.approx(0.9872088201179505, abs=1e-6)

    def test_memberships_rows_sum_to_one(self, blobs3):
        X, _ = blobs3
        res = fcm(X, 3, 2.0, seed=5)
        np.testing.assert_allclose(res.memberships.sum(axis=1), 1.0, atol=1e-9)
        assert res.memberships.min() >= 0.0
        assert res.memberships.max() <= 1.0

    def test_large_m_membership_map_approaches_uniform(self):
        # The membership update tends to 1/k as m grows (for centers whose
        # distances to a point are within a bounded ratio).  A full fit at
        # huge m instead pins centers onto single points, since the u^m
        # weights degenerate to winner-take-all, so the limit is checked on
        # the update map itself.
        from loadclust.clusterers import _fcm_memberships, _sq_dists

        rng = np.random.default_rng(6)
        centers = np.array([[0.0, 0.0], [2.0, 0.0], [1.0, 1.8]])
        angles = rng.uniform(0, 2 * np.pi, size=40)
        points = np.array([1.0, 0.6]) + 3.0 * np.column_stack([np.cos(angles), np.sin(angles)])
        for m, bound in [(5.0, 0.25), (50.0, 0.02)]:
            U = _fcm_memberships(_sq_dists(points, centers), m)
            assert np.abs(U - 1.0 / 3.0).max() < bound

    def test_duplicate_points_identical_rows(self):
        X = np.array([[0.0, 0.0], [4.0, 4.0], [0.0, 0.0], [6.0, 1.0]])
        res = fcm(X, 2, 2.0, seed=7)
        np.testing.assert_allclose(res.memberships[0], res.memberships[2], atol=1e-12)

    def test_m_at_most_one_rejected(self):
        with pytest.raises(ValueError, match="m"):
            fcm(LINE4, 2, 1.0, seed=0)

    def test_nonconvergence_flagged_not_raised(self, blobs3):
        X, _ = blobs3
        res = fcm(X, 3, 2.0, max_iter=1, seed=8)
        assert res.converged is False


class TestHelpers:
    def test_hardened_argmax(self):
        res = ClusteringResult(
            labels=np.array([0, 1, 2]),
            centers=np.zeros((3, 2)),
            k=3,
            method="FCM",
            objective=0.0,
            memberships=np.array([[0.2, 0.7, 0.1], [0.5, 0.5, 0.0], [0.1, 0.2, 0.7]]),
            fuzzifier=2.0,
        )
        np.testing.assert_array_equal(hardened_labels(res), [1, 0, 2])

    def test_hard_passthrough(self):
        res = kmeans(LINE4, 2, seed=0)
        np.testing.assert_array_equal(hardened_labels(res), res.labels)

    def test_centroids_singleton_and_midpoint(self):
        X = np.array([[0.0, 0.0], [2.0, 2.0], [5.0, 5.0]])
        centers = centroids_from_labels(X, [0, 0, 1])
        np.testing.assert_allclose(centers, [[1.0, 1.0], [5.0, 5.0]])

    def test_centroids_empty_cluster_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            centroids_from_labels(np.zeros((3, 1)), [0, 0, 2])

    def test_kmeans_centers_equal_label_centroids(self, blobs3):
        X, _ = blobs3
        res = kmeans(X, 3, seed=9)
        np.testing.assert_allclose(
            res.centers, centroids_from_labels(X, res.labels, 3), atol=1e-9
        )

    def test_relabeling_preserves_partition_objective(self, blobs3):
        X, _ = blobs3
        res = kmeans(X, 3, seed=10)
        perm = np.array([2, 0, 1])
        relabeled = ClusteringResult(
            labels=perm[res.labels],
            centers=res.centers[np.argsort(perm)],
            k=3,
            method="KMC",
            objective=res.objective,
        )
        sse = ((X - relabeled.centers[relabeled.labels]) ** 2).sum()
        assert sse == pytest.approx(res.objective, rel=1e-12)

    def test_result_json_round_trip(self, blobs3):
        X, _ = blobs3
        for res in (kmeans(X, 3, seed=0), fcm(X, 3, 2.0, seed=0)):
            back = ClusteringResult.from_json(res.to_json())
            np.testing.assert_array_equal(back.labels, res.labels)
            np.testing.assert_allclose(back.centers, res.centers, atol=1e-15)
            if res.memberships is not None:
                np.testing.assert_allclose(back.memberships, res.memberships, atol=1e-15)
