# src/annindex/neighbors.py
"""
Exact k-nearest-neighbour search and within-category all-nearest-neighbours.

All distances are squared L2; ties are broken by the lower object id.

all_nn_within_category has two paths:
- exact: per-category full distance matrix
- ivf: per-category k-means with ceil(sqrt(n)) cells; the queries of each
  cell are compared against the members of the `nprobe` cells whose
  centroids are nearest to that cell's centroid. With nprobe >= number of
  cells the result is identical to the exact path.
"""

import logging
import math

import numpy as np

from src.annindex.distance import as_id_matrix, squared_distances
from src.annindex.kmeans import kmeans_fit

logger = logging.getLogger(__name__)

NN_METHODS = ('exact', 'ivf', 'auto')


def knn_exact(query, gallery, k, exclude=()):
    """Ordered [(id, squared distance)] of the min(k, |gallery - exclude|) nearest gallery items."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    ids, matrix = as_id_matrix(gallery)
    if len(ids) == 0:
        return []
    keep = ~np.isin(ids, np.asarray(list(exclude), dtype=np.int64))
    ids, matrix = ids[keep], matrix[keep]
    if len(ids) == 0:
        return []
    d = squared_distances(query, matrix)[0]
    order = np.lexsort((ids, d))[:k]
    return [(int(ids[i]), float(d[i])) for i in order]


def _rank_rows(d, candidate_ids, k):
    """Stable argsort per row; candidate_ids ascending so equal distances keep the lower id first."""
    order = np.argsort(d, axis=1, kind='stable')[:, :k]
    return [[(int(candidate_ids[j]), float(d[r, j])) for j in row if np.isfinite(d[r, j])]
            for r, row in enumerate(order)]


def _exact_category(ids, matrix, k):
    d = squared_distances(matrix, matrix)
    np.fill_diagonal(d, np.inf)
    return dict(zip(ids.tolist(), _rank_rows(d, ids, min(k, len(ids) - 1))))


def _ivf_category(ids, matrix, k, nprobe, iters, seed):
    n = len(ids)
    k = min(k, n - 1)
    n_cells = max(1, math.ceil(math.sqrt(n)))
    km = kmeans_fit(matrix, n_cells, iters=iters, seed=seed)
    cell_d = squared_distances(km.centroids, km.centroids)
    members = [np.flatnonzero(km.assignment == c) for c in range(n_cells)]

    lists = {}
    for cell, queries in enumerate(members):
        if len(queries) == 0:
            continue
        ranked = [cell] + [c for c in np.argsort(cell_d[cell], kind='stable').tolist() if c != cell]
        n_probe = min(max(1, nprobe), n_cells)
        candidates = np.sort(np.concatenate([members[c] for c in ranked[:n_probe]]))
        while len(candidates) - 1 < k and n_probe < n_cells:
            n_probe += 1
            candidates = np.sort(np.concatenate([members[c] for c in ranked[:n_probe]]))

        d = squared_distances(matrix[queries], matrix[candidates])
        self_cols = np.searchsorted(candidates, queries)
        d[np.arange(len(queries)), self_cols] = np.inf
        for q, row in zip(queries.tolist(), _rank_rows(d, ids[candidates], k)):
            lists[int(ids[q])] = row
    return lists


def all_nn_within_category(embeddings, categories, k, method='exact', nprobe=3,
                           exact_threshold=256, iters=10, seed=0):
    """{object_id: [(neighbor_id, squared distance), ...]} restricted to the object's category."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if method not in NN_METHODS:
        raise ValueError(f"Unknown all-NN method '{method}', expected one of {NN_METHODS}")

    ids, matrix = as_id_matrix(embeddings)
    cats = np.asarray([categories[int(o)] for o in ids], dtype=np.int64)
    neighbor_lists = {}
    for c in np.unique(cats).tolist():
        in_cat = cats == c
        cat_ids, cat_matrix = ids[in_cat], matrix[in_cat]
        if len(cat_ids) == 1:
            neighbor_lists[int(cat_ids[0])] = []
            continue
        use_ivf = method == 'ivf' or (method == 'auto' and len(cat_ids) > exact_threshold)
        if use_ivf:
            neighbor_lists.update(_ivf_category(cat_ids, cat_matrix, k, nprobe, iters, seed + c))
        else:
            neighbor_lists.update(_exact_category(cat_ids, cat_matrix, k))
    return dict(sorted(neighbor_lists.items()))
