# src/curriculum/benchmark.py
"""
Per-object cost of the three partner-selection strategies across a grid of
objects-per-category, on clustered synthetic aggregate embeddings.

S2 runs the IVF-accelerated all-NN path; S3 partitions into
partitions_for_epoch(epoch) cells.
"""

import logging
import time

import numpy as np

from src.curriculum.samplers import partners_s1, partners_s2, partners_s3
from src.curriculum.schedule import CurriculumConfig, StrategyId, partitions_for_epoch

logger = logging.getLogger(__name__)

BENCH_COLUMNS = ('n_obj_per_cat', 'strategy', 'ns_per_object')


def clustered_aggregates(n_categories, per_category, dim, rng, category_spread=2.0, object_spread=0.5):
    centers = rng.normal(size=(n_categories, dim)) * category_spread
    categories = np.repeat(np.arange(n_categories), per_category)
    points = centers[categories] + rng.normal(size=(len(categories), dim)) * object_spread
    return np.arange(len(categories), dtype=np.int64), categories.astype(np.int64), points


def _best_ns(fn, repeats):
    best = None
    for _ in range(repeats):
        start = time.perf_counter_ns()
        fn()
        elapsed = time.perf_counter_ns() - start
        best = elapsed if best is None else min(best, elapsed)
    return best


def bench_sampling(objects_per_category, n_categories=4, dim=64, seed=0, repeats=3, epoch=50,
                   curriculum=None):
    """Returns rows (n_obj_per_cat, strategy, ns_per_object) for every grid point and strategy."""
    curriculum = curriculum or CurriculumConfig()
    rows = []
    for per_category in objects_per_category:
        rng = np.random.default_rng([seed, per_category])
        ids, cats, points = clustered_aggregates(n_categories, per_category, dim, rng)
        n = len(ids)
        k = partitions_for_epoch(epoch, curriculum, n_objects=n)

        timings = {
            StrategyId.S1_RANDOM_SAME_CAT: lambda: partners_s1(ids, cats, rng),
            StrategyId.S2_NEIGHBORS_SAME_CAT: lambda: partners_s2(ids, cats, points, curriculum.top_k, rng,
                                                                  method='ivf', nprobe=curriculum.nprobe),
            StrategyId.S3_NEIGHBORS_ANY_CAT: lambda: partners_s3(ids, cats, points, k, rng,
                                                                 kmeans_iters=curriculum.kmeans_iters),
        }
        for strategy, fn in timings.items():
            ns = _best_ns(fn, repeats) / n
            rows.append((per_category, strategy.value, float(ns)))
            logger.info(f"bench: {per_category} objects/category, {strategy.value}: {ns:.0f} ns/object")
    return rows
