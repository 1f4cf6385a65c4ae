import math

import numpy as np
import pytest

from src.annindex import (NO_NEIGHBOR, all_nn_within_category, build_ivf, kmeans_fit, knn_exact,
                          sample_within_cell, squared_distances)
from src.utils.errors import IndexBuildError


def _brute_force_knn(ids, matrix, categories, k):
    """Per-object double loop over same-category objects, ties by lower id."""
    lists = {}
    for i, o in enumerate(ids):
        candidates = []
        for j, p in enumerate(ids):
            if p == o or categories[p] != categories[o]:
                continue
            candidates.append((float(np.sum((matrix[i] - matrix[j]) ** 2)), p))
        candidates.sort()
        lists[o] = [p for _, p in candidates[:k]]
    return lists


class TestSquaredDistances:
    def test_matches_naive(self, rng):
        a = rng.normal(size=(300, 5))
        b = rng.normal(size=(7, 5))
        naive = np.array([[np.sum((x - y) ** 2) for y in b] for x in a])
        np.testing.assert_allclose(squared_distances(a, b), naive, rtol=1e-12)

    def test_zero_on_identical(self):
        x = np.array([[1.0, 2.0], [3.0, 4.0]])
        np.testing.assert_array_equal(np.diag(squared_distances(x, x)), [0.0, 0.0])


class TestKMeans:
    def test_objective_non_increasing(self, rng):
        points = rng.normal(size=(200, 4))
        result = kmeans_fit(points, 6, iters=15, seed=2)
        history = np.array(result.objective_history)
        assert np.all(np.diff(history) <= 1e-9)
        assert len(history) == 16

    def test_seeded(self, rng):
        points = rng.normal(size=(50, 3))
        a = kmeans_fit(points, 4, seed=7)
        b = kmeans_fit(points, 4, seed=7)
        np.testing.assert_array_equal(a.centroids, b.centroids)
        np.testing.assert_array_equal(a.assignment, b.assignment)

    def test_k_equals_n(self, rng):
        points = rng.normal(size=(5, 2))
        result = kmeans_fit(points, 5, iters=3)
        assert sorted(result.assignment.tolist()) == [0, 1, 2, 3, 4]
        assert result.objective == 0.0

    @pytest.mark.parametrize('seed', range(6))
    def test_empty_cluster_reseeded_from_farthest(self, seed):
        # duplicate points can seed two identical centroids; the far point must get its own cluster
        points = np.array([[0.0], [0.0], [0.0], [10.0]])
        result = kmeans_fit(points, 2, iters=5, seed=seed)
        np.testing.assert_array_equal(np.sort(result.centroids[:, 0]), [0.0, 10.0])
        assert result.objective == 0.0
        assert np.bincount(result.assignment, minlength=2).min() >= 1

    def test_single_cluster_is_the_mean(self, rng):
        points = rng.normal(size=(50, 3)) * 4.0 + 1.5
        result = kmeans_fit(points, 1, iters=3, seed=5)
        np.testing.assert_allclose(result.centroids[0], points.mean(axis=0), atol=1e-12)
        assert result.assignment.tolist() == [0] * 50

    @pytest.mark.parametrize('seed', range(5))
    def test_two_separated_blobs(self, seed):
        rng = np.random.default_rng(seed)
        left = rng.normal(size=(30, 2)) * 0.01 + [-100.0, 0.0]
        right = rng.normal(size=(20, 2)) * 0.01 + [100.0, 5.0]
        result = kmeans_fit(np.vstack([left, right]), 2, iters=10, seed=seed)
        centroids = result.centroids[np.argsort(result.centroids[:, 0])]
        np.testing.assert_allclose(centroids[0], left.mean(axis=0), atol=1e-6)
        np.testing.assert_allclose(centroids[1], right.mean(axis=0), atol=1e-6)

    @pytest.mark.parametrize('n, k, iters', [(3, 4, 5), (5, 0, 5), (5, 2, 0)])
    def test_invalid_arguments(self, n, k, iters):
        with pytest.raises(IndexBuildError):
            kmeans_fit(np.zeros((n, 2)), k, iters=iters)


class TestIVF:
    def test_assignment_is_nearest_centroid(self, rng):
        points = rng.normal(size=(120, 6))
        embeddings = {i * 3: points[i] for i in range(120)}
        index = build_ivf(embeddings, 9, iters=10, seed=1)
        for o, v in embeddings.items():
            d = squared_distances(v, index.centroids)[0]
            assert index.cell_of(o) == int(np.argmin(d))
        assert sum(index.cell_sizes()) == 120
        for members in index.inverted_lists:
            assert list(members) == sorted(members)

    def test_unknown_object(self, rng):
        index = build_ivf({0: rng.normal(size=2), 1: rng.normal(size=2)}, 1)
        with pytest.raises(IndexBuildError):
            index.cell_of(99)

    def test_too_few_objects(self, rng):
        with pytest.raises(IndexBuildError):
            build_ivf({0: rng.normal(size=2)}, 2)

    def test_sample_within_cell(self, rng):
        points = rng.normal(size=(60, 3))
        index = build_ivf((np.arange(60), points), 4, seed=0)
        for o in range(60):
            cell = index.cell_of(o)
            partner = sample_within_cell(index, o, rng)
            if len(index.inverted_lists[cell]) < 2:
                assert partner == NO_NEIGHBOR
            else:
                assert partner != o
                assert index.cell_of(partner) == cell

    def test_sample_within_cell_is_uniform(self):
        index = build_ivf((np.array([2, 5, 7, 9, 11]), np.zeros((5, 2))), 1)
        rng = np.random.default_rng(17)
        n_draws = 10_000
        draws = [sample_within_cell(index, 5, rng) for _ in range(n_draws)]
        counts = {o: draws.count(o) for o in (2, 7, 9, 11)}
        assert sum(counts.values()) == n_draws
        sigma = math.sqrt(n_draws * 0.25 * 0.75)
        for count in counts.values():
            assert abs(count - n_draws / 4) < 5 * sigma

    def test_singleton_cells(self, rng):
        points = rng.normal(size=(4, 2))
        index = build_ivf((np.arange(4), points), 4, iters=2)
        assert all(sample_within_cell(index, o, rng) == NO_NEIGHBOR for o in range(4))

    def test_sample_covers_every_other_member(self):
        points = np.zeros((4, 2))
        index = build_ivf((np.array([2, 5, 7, 9]), points), 1)
        rng = np.random.default_rng(0)
        seen = {sample_within_cell(index, 5, rng) for _ in range(200)}
        assert seen == {2, 7, 9}


class TestKnnExact:
    def test_ties_by_lower_id(self):
        gallery = {4: np.array([1.0, 0.0]), 2: np.array([-1.0, 0.0]), 9: np.array([0.0, 3.0])}
        result = knn_exact(np.zeros(2), gallery, 2)
        assert [o for o, _ in result] == [2, 4]
        assert [d for _, d in result] == [1.0, 1.0]

    def test_exclude_and_short_gallery(self):
        gallery = {0: np.zeros(2), 1: np.ones(2)}
        assert [o for o, _ in knn_exact(np.zeros(2), gallery, 5, exclude=[0])] == [1]
        assert knn_exact(np.zeros(2), gallery, 1, exclude=[0, 1]) == []

    def test_three_four_five(self):
        gallery = {0: np.zeros(2), 1: np.array([3.0, 4.0])}
        assert knn_exact(np.zeros(2), gallery, 1, exclude={0}) == [(1, 25.0)]

    def test_matches_full_sort(self, rng):
        ids = rng.choice(500, size=20, replace=False).tolist()
        gallery = {o: rng.normal(size=3) for o in ids}
        query = rng.normal(size=3)
        ranked = sorted((float(np.sum((query - v) ** 2)), o) for o, v in gallery.items())
        result = knn_exact(query, gallery, 5)
        assert [o for o, _ in result] == [o for _, o in ranked[:5]]
        np.testing.assert_allclose([d for _, d in result], [d for d, _ in ranked[:5]], rtol=1e-12)
        assert [o for o, _ in knn_exact(query, gallery, 50)] == [o for _, o in ranked]

    def test_invalid_k(self):
        with pytest.raises(ValueError):
            knn_exact(np.zeros(2), {0: np.zeros(2)}, 0)


class TestAllNearestNeighbors:
    def test_exact_matches_brute_force_on_random_instances(self):
        rng = np.random.default_rng(99)
        for _ in range(100):
            n = int(rng.integers(2, 25))
            dim = int(rng.integers(1, 5))
            k = int(rng.integers(1, 6))
            ids = sorted(rng.choice(1000, size=n, replace=False).tolist())
            matrix = rng.normal(size=(n, dim))
            categories = {o: int(rng.integers(0, 3)) for o in ids}
            result = all_nn_within_category((np.array(ids), matrix), categories, k, method='exact')
            expected = _brute_force_knn(ids, matrix, categories, k)
            assert {o: [p for p, _ in lst] for o, lst in result.items()} == expected

    def test_ivf_with_full_probe_equals_exact(self, rng):
        n = 50
        matrix = rng.normal(size=(n, 4))
        categories = {o: o % 2 for o in range(n)}
        exact = all_nn_within_category((np.arange(n), matrix), categories, 4, method='exact')
        n_cells = math.ceil(math.sqrt(25))
        ivf = all_nn_within_category((np.arange(n), matrix), categories, 4, method='ivf', nprobe=n_cells)
        assert {o: [p for p, _ in v] for o, v in ivf.items()} == {o: [p for p, _ in v] for o, v in exact.items()}

    def test_ivf_neighbors_stay_in_category(self, rng):
        matrix = rng.normal(size=(90, 3))
        categories = {o: o % 3 for o in range(90)}
        result = all_nn_within_category((np.arange(90), matrix), categories, 5, method='ivf', nprobe=1)
        for o, neighbors in result.items():
            assert len(neighbors) == 5
            assert all(categories[p] == categories[o] and p != o for p, _ in neighbors)
            distances = [d for _, d in neighbors]
            assert distances == sorted(distances)

    def test_singleton_category(self):
        embeddings = {0: np.zeros(2), 1: np.ones(2), 2: np.full(2, 2.0)}
        result = all_nn_within_category(embeddings, {0: 0, 1: 0, 2: 1}, 3)
        assert result[2] == []
        assert [p for p, _ in result[0]] == [1]

    def test_returns_squared_distances(self):
        embeddings = {0: np.zeros(2), 1: np.array([3.0, 4.0])}
        result = all_nn_within_category(embeddings, {0: 0, 1: 0}, 1)
        assert result[0] == [(1, 25.0)]

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            all_nn_within_category({0: np.zeros(1), 1: np.ones(1)}, {0: 0, 1: 0}, 1, method='hnsw')
