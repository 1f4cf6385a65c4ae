# src/annindex/kmeans.py
"""
Lloyd's k-means with seeded random-point initialisation.

- init: K distinct points drawn uniformly with the seeded RNG
- assignment ties: lowest centroid index (np.argmin)
- empty clusters: centroid moved to the currently farthest point
  (farthest from its assigned centroid), distinct points for several empties
- objective_history[i] is the within-cluster sum of squares after the i-th
  assignment step; it is non-increasing
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from src.annindex.distance import squared_distances
from src.utils.errors import IndexBuildError

logger = logging.getLogger(__name__)


@dataclass
class KMeansResult:
    centroids: np.ndarray
    assignment: np.ndarray
    objective_history: list = field(default_factory=list)

    @property
    def objective(self):
        return self.objective_history[-1]


def assign(points, centroids):
    d2 = squared_distances(points, centroids)
    labels = np.argmin(d2, axis=1)
    return labels, d2[np.arange(len(points)), labels]


def _repair_empty(points, centroids, labels, point_d2):
    counts = np.bincount(labels, minlength=len(centroids))
    empty = np.flatnonzero(counts == 0)
    if empty.size == 0:
        return
    # Farthest first; stable sort keeps the lowest index among equal distances.
    farthest = np.argsort(-point_d2, kind='stable')
    for cluster, point in zip(empty.tolist(), farthest.tolist()):
        logger.debug(f"k-means: cluster {cluster} empty, reseeded from point {point}")
        centroids[cluster] = points[point]
        labels[point] = cluster
        point_d2[point] = 0.0


def kmeans_fit(points, K, iters=20, seed=0):
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2:
        raise IndexBuildError(f"k-means expects an N x D matrix, got shape {points.shape}")
    N = points.shape[0]
    if K < 1:
        raise IndexBuildError(f"K must be >= 1, got {K}")
    if N < K:
        raise IndexBuildError(f"k-means needs at least K={K} points, got {N}")
    if iters < 1:
        raise IndexBuildError(f"iters must be >= 1, got {iters}")

    rng = np.random.default_rng(seed)
    centroids = points[rng.choice(N, size=K, replace=False)].copy()
    history = []

    # Fixed I iterations, no convergence test.
    for _ in range(iters):
        labels, point_d2 = assign(points, centroids)
        history.append(float(point_d2.sum()))
        _repair_empty(points, centroids, labels, point_d2)
        for k in range(K):
            members = labels == k
            if members.any():
                centroids[k] = points[members].mean(axis=0)

    labels, point_d2 = assign(points, centroids)
    history.append(float(point_d2.sum()))
    logger.debug(f"k-means K={K} N={N}: {len(history)} objective evaluations, final {history[-1]:.6g}")
    return KMeansResult(centroids=centroids, assignment=labels, objective_history=history)
