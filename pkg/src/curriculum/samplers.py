# src/curriculum/samplers.py
"""
Pair samplers for the three strategies.

    S1: partner uniform over the other objects of the same category
    S2: partner uniform over the top-k same-category neighbours of the object
    S3: partner uniform over the other members of the object's IVF cell,
        falling back to S1 when the cell is a singleton

Every object with train images appears exactly once in the x role, in
ascending id order. The partner_* cores work on plain arrays and are what
the sampling benchmark times; sample_pairs_* add per-object view sampling.
RNG consumption order: (S3 only: k-means seed), partners, then views.
"""

import logging
from dataclasses import dataclass

import numpy as np

from src.annindex import NO_NEIGHBOR, all_nn_within_category, build_ivf, sample_within_cell
from src.curriculum.schedule import StrategyId, partitions_for_epoch
from src.utils.errors import DatasetError

logger = logging.getLogger(__name__)


@dataclass
class PairBatch:
    pairs: list
    images: dict
    strategy: StrategyId
    epoch: int
    n_fallback: int = 0
    partitions: int = None

    @property
    def objects(self):
        return sorted({o for pair in self.pairs for o in pair})


def _category_members(object_ids, categories):
    members = {}
    for o, c in zip(object_ids.tolist(), categories.tolist()):
        members.setdefault(c, []).append(o)
    return {c: np.asarray(m, dtype=np.int64) for c, m in members.items()}


def _check_category_sizes(members):
    for c, m in sorted(members.items()):
        if len(m) < 2:
            raise DatasetError(f"Category {c} has a single object ({int(m[0])}); same-category pair "
                               f"sampling needs at least two objects per category")


def _random_same_category(object_id, category, members, rng):
    group = members[category]
    pos = int(np.searchsorted(group, object_id))
    j = int(rng.integers(len(group) - 1))
    return int(group[j + 1] if j >= pos else group[j])


def partners_s1(object_ids, categories, rng):
    """One uniformly random same-category partner per object (object_ids ascending)."""
    object_ids = np.asarray(object_ids, dtype=np.int64)
    categories = np.asarray(categories, dtype=np.int64)
    members = _category_members(object_ids, categories)
    _check_category_sizes(members)
    return [_random_same_category(o, c, members, rng) for o, c in zip(object_ids.tolist(), categories.tolist())]


def partners_s2(object_ids, categories, aggregates, top_k, rng, method='auto', nprobe=3, kmeans_iters=10):
    """One partner per object drawn uniformly from its top_k same-category neighbours."""
    object_ids = np.asarray(object_ids, dtype=np.int64)
    category_of = dict(zip(object_ids.tolist(), np.asarray(categories).tolist()))
    _check_category_sizes(_category_members(object_ids, np.asarray(categories)))
    neighbors = all_nn_within_category((object_ids, aggregates), category_of, top_k, method=method,
                                       nprobe=nprobe, iters=kmeans_iters)
    partners = []
    for o in object_ids.tolist():
        candidates = neighbors[o]
        partners.append(int(candidates[int(rng.integers(len(candidates)))][0]))
    return partners


def partners_s3(object_ids, categories, aggregates, n_partitions, rng, kmeans_iters=20):
    """One partner per object from its IVF cell; returns (partners, n_fallback, index)."""
    object_ids = np.asarray(object_ids, dtype=np.int64)
    categories = np.asarray(categories, dtype=np.int64)
    members = _category_members(object_ids, categories)
    kmeans_seed = int(rng.integers(2 ** 31))
    index = build_ivf((object_ids, aggregates), n_partitions, iters=kmeans_iters, seed=kmeans_seed)

    partners, n_fallback = [], 0
    for o, c in zip(object_ids.tolist(), categories.tolist()):
        partner = sample_within_cell(index, o, rng)
        if partner == NO_NEIGHBOR:
            n_fallback += 1
            if len(members[c]) < 2:
                raise DatasetError(f"Object {o} is alone in its cell and in category {c}")
            partner = _random_same_category(o, c, members, rng)
        partners.append(partner)
    if n_fallback:
        logger.debug(f"S3: {n_fallback} of {len(object_ids)} objects fell back to same-category sampling")
    return partners, n_fallback, index


def sample_views(dataset, object_ids, n_views, rng):
    """{object_id: n_views train row indices}, without replacement unless the object has fewer rows."""
    train_rows = dataset.rows_by_object('train')
    images = {}
    for o in sorted(set(int(o) for o in object_ids)):
        rows = train_rows.get(o)
        if rows is None or len(rows) == 0:
            raise DatasetError(f"Object {o} has no train images to sample")
        images[o] = rng.choice(rows, size=n_views, replace=len(rows) < n_views)
    return images


def _train_objects(dataset):
    train_rows = dataset.rows_by_object('train')
    ids = np.asarray(sorted(train_rows), dtype=np.int64)
    manifest = dataset.manifest
    return ids, np.asarray([manifest[o] for o in ids.tolist()], dtype=np.int64)


def _aggregate_matrix(object_aggregates, object_ids):
    return np.asarray([object_aggregates[o] for o in object_ids.tolist()], dtype=np.float64)


def _finish(dataset, object_ids, partners, strategy, epoch, n_views, rng, **kwargs):
    pairs = [(int(x), int(y)) for x, y in zip(object_ids.tolist(), partners)]
    images = sample_views(dataset, [o for pair in pairs for o in pair], n_views, rng)
    return PairBatch(pairs=pairs, images=images, strategy=strategy, epoch=epoch, **kwargs)


def sample_pairs_S1(dataset, rng, n_views=4, epoch=1):
    object_ids, categories = _train_objects(dataset)
    partners = partners_s1(object_ids, categories, rng)
    return _finish(dataset, object_ids, partners, StrategyId.S1_RANDOM_SAME_CAT, epoch, n_views, rng)


def sample_pairs_S2(object_aggregates, dataset, top_k, rng, n_views=4, epoch=1, method='auto', nprobe=3):
    object_ids, categories = _train_objects(dataset)
    partners = partners_s2(object_ids, categories, _aggregate_matrix(object_aggregates, object_ids),
                           top_k, rng, method=method, nprobe=nprobe)
    return _finish(dataset, object_ids, partners, StrategyId.S2_NEIGHBORS_SAME_CAT, epoch, n_views, rng)


def sample_pairs_S3(object_aggregates, dataset, epoch, config, rng):
    object_ids, categories = _train_objects(dataset)
    k = partitions_for_epoch(epoch, config, n_objects=len(object_ids))
    partners, n_fallback, _ = partners_s3(object_ids, categories, _aggregate_matrix(object_aggregates, object_ids),
                                          k, rng, kmeans_iters=config.kmeans_iters)
    return _finish(dataset, object_ids, partners, StrategyId.S3_NEIGHBORS_ANY_CAT, epoch, config.views, rng,
                   n_fallback=n_fallback, partitions=k)


def sample_pairs(strategy, dataset, epoch, config, rng, object_aggregates=None):
    """Dispatches to the sampler for `strategy` using the curriculum config."""
    strategy = StrategyId.parse(strategy)
    if strategy is StrategyId.S1_RANDOM_SAME_CAT:
        return sample_pairs_S1(dataset, rng, n_views=config.views, epoch=epoch)
    if object_aggregates is None:
        raise ValueError(f"{strategy.value} sampling needs the previous epoch's object aggregates")
    if strategy is StrategyId.S2_NEIGHBORS_SAME_CAT:
        return sample_pairs_S2(object_aggregates, dataset, config.top_k, rng, n_views=config.views,
                               epoch=epoch, method=config.nn_method, nprobe=config.nprobe)
    return sample_pairs_S3(object_aggregates, dataset, epoch, config, rng)
