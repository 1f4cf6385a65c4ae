# src/annindex/ivf.py
"""
Inverted-file (IVF) partition of aggregated object embeddings.

Cells are the Voronoi cells of k-means centroids under squared L2 (a flat
L2 quantizer). Inverted lists hold object ids in ascending order.
"""

import logging
from dataclasses import dataclass

import numpy as np

from src.annindex.distance import as_id_matrix
from src.annindex.kmeans import kmeans_fit
from src.utils.errors import IndexBuildError

logger = logging.getLogger(__name__)

# Returned by sample_within_cell when the query is alone in its cell.
NO_NEIGHBOR = -1


@dataclass
class PartitionIndex:
    centroids: np.ndarray
    inverted_lists: list
    assignment: dict
    objective_history: list

    @property
    def K(self):
        return int(self.centroids.shape[0])

    def cell_of(self, object_id):
        try:
            return self.assignment[int(object_id)]
        except KeyError:
            raise IndexBuildError(f"Object {object_id} is not in the index") from None

    def cell_sizes(self):
        return [len(members) for members in self.inverted_lists]


def build_ivf(embeddings, K, iters=20, seed=0):
    """Builds a PartitionIndex over {object_id: vector} (or (ids, matrix))."""
    ids, matrix = as_id_matrix(embeddings)
    if len(ids) < K:
        raise IndexBuildError(f"IVF with K={K} cells needs at least {K} objects, got {len(ids)}")
    result = kmeans_fit(matrix, K, iters=iters, seed=seed)

    inverted_lists = [ids[result.assignment == k] for k in range(K)]
    assignment = {int(o): int(c) for o, c in zip(ids.tolist(), result.assignment.tolist())}
    sizes = [len(m) for m in inverted_lists]
    logger.debug(f"Built IVF over {len(ids)} objects: K={K}, largest cell {max(sizes)}, "
                 f"singletons {sum(1 for s in sizes if s == 1)}")
    return PartitionIndex(centroids=result.centroids, inverted_lists=inverted_lists,
                          assignment=assignment, objective_history=result.objective_history)


def sample_within_cell(index, object_id, rng):
    """Uniformly random other member of `object_id`'s cell, or NO_NEIGHBOR for a singleton cell."""
    members = index.inverted_lists[index.cell_of(object_id)]
    if len(members) < 2:
        return NO_NEIGHBOR
    pos = int(np.searchsorted(members, object_id))
    j = int(rng.integers(len(members) - 1))
    if j >= pos:
        j += 1
    return int(members[j])
