# src/dataset/synthetic.py
"""
Synthetic "objects with state changes" generator.

Each category has a prototype latent; each object sits near its prototype.
A fraction of objects is planted in cross-category near-duplicate groups
(latents within `confuser_epsilon` of each other). Every (object, state) pair
emits `views_per_state` feature vectors:

    feature = (1 - s) * latent + s * tanh(W[c, state] @ (latent + U @ z) + b[c, state]) + noise

where s is `state_warp_strength`, (W, b) are seeded per (category, state),
U is a low-rank pose basis and z ~ N(0, pose_jitter^2) per view.

The RNG stream order (prototypes, offsets, confusers, pose basis, warps,
records) is part of the output contract: the same SynthConfig always yields
byte-identical feature files.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from src.dataset.records import Dataset, SPLIT_TRAIN

logger = logging.getLogger(__name__)


@dataclass
class SynthConfig:
    n_categories: int
    objects_per_category: int
    states_per_object: int
    views_per_state: int
    seed: int
    feature_dim: int = 64
    confuser_fraction: float = 0.0
    state_warp_strength: float = 0.5
    noise_sigma: float = 0.05
    pose_jitter: float = 0.2
    pose_rank: int = 3
    confuser_epsilon: float = 0.05
    confuser_group_size: int = 2
    category_spread: float = 1.0
    object_spread: float = 0.5
    test_ratio: float = 0.25

    def validate(self):
        for name in ('n_categories', 'objects_per_category', 'states_per_object',
                     'views_per_state', 'feature_dim', 'pose_rank'):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        if not 0.0 <= self.test_ratio <= 1.0:
            raise ValueError(f"test_ratio must be in [0, 1], got {self.test_ratio}")
        if not 0.0 <= self.confuser_fraction <= 1.0:
            raise ValueError(f"confuser_fraction must be in [0, 1], got {self.confuser_fraction}")
        for name in ('state_warp_strength', 'noise_sigma', 'pose_jitter', 'category_spread', 'object_spread'):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")
        if self.confuser_epsilon <= 0:
            raise ValueError(f"confuser_epsilon must be > 0, got {self.confuser_epsilon}")
        if self.confuser_group_size < 2:
            raise ValueError(f"confuser_group_size must be >= 2, got {self.confuser_group_size}")
        return self

    @property
    def n_objects(self):
        return self.n_categories * self.objects_per_category


def _interleave_by_category(rng, n_categories, per_category):
    """Round-robin over categories, each category's objects in a seeded random order.

    Consecutive entries come from different categories whenever n_categories >= 2.
    """
    orders = [c * per_category + rng.permutation(per_category) for c in range(n_categories)]
    return [int(orders[c][i]) for i in range(per_category) for c in range(n_categories)]


def _plan_confuser_groups(rng, config):
    n_planted = math.ceil(config.confuser_fraction * config.n_objects)
    if n_planted == 1:
        n_planted = 2
    n_planted = min(n_planted, config.n_objects)
    order = _interleave_by_category(rng, config.n_categories, config.objects_per_category)
    if n_planted < 2:
        return []

    chosen = order[:n_planted]
    size = config.confuser_group_size
    groups = [chosen[i:i + size] for i in range(0, len(chosen), size)]
    if len(groups) > 1 and len(groups[-1]) < 2:
        groups[-2].extend(groups.pop())
    if config.n_categories == 1:
        logger.warning("Only one category: confuser groups are within-category")
    return groups


def _plant_confusers(rng, latents, groups, epsilon):
    """Moves every non-anchor member to within epsilon/2 of its group anchor."""
    dim = latents.shape[1]
    for group in groups:
        anchor = latents[group[0]].copy()
        for member in group[1:]:
            direction = rng.normal(size=dim)
            direction /= np.linalg.norm(direction)
            radius = epsilon * rng.uniform(0.05, 0.45)
            latents[member] = anchor + radius * direction


def generate(config):
    """Generates a Dataset (all records in the train split) from a SynthConfig."""
    config.validate()
    rng = np.random.default_rng(config.seed)
    C, P, S, V, F = (config.n_categories, config.objects_per_category, config.states_per_object,
                     config.views_per_state, config.feature_dim)
    n_objects = C * P
    categories = np.repeat(np.arange(C), P)

    prototypes = rng.normal(size=(C, F)) * config.category_spread
    offsets = rng.normal(size=(n_objects, F)) * config.object_spread
    latents = prototypes[categories] + offsets

    groups = _plan_confuser_groups(rng, config)
    _plant_confusers(rng, latents, groups, config.confuser_epsilon)

    pose_basis = rng.normal(size=(F, config.pose_rank)) / math.sqrt(F)
    warp_w = rng.normal(size=(C, S, F, F)) / math.sqrt(F)
    warp_b = rng.normal(size=(C, S, F)) * 0.1

    s = config.state_warp_strength
    n_records = n_objects * S * V
    features = np.empty((n_records, F), dtype=np.float64)
    object_ids = np.repeat(np.arange(n_objects), S * V)
    state_ids = np.tile(np.repeat(np.arange(S), V), n_objects)

    row = 0
    for o in range(n_objects):
        c = categories[o]
        for state in range(S):
            z = rng.normal(size=(V, config.pose_rank)) * config.pose_jitter
            noise = rng.normal(size=(V, F)) * config.noise_sigma
            posed = latents[o] + z @ pose_basis.T
            warped = np.tanh(posed @ warp_w[c, state].T + warp_b[c, state])
            features[row:row + V] = (1.0 - s) * latents[o] + s * warped + noise
            row += V

    names = {int(o): f"cat{int(categories[o]):02d}-obj{o:03d}" for o in range(n_objects)}
    dataset = Dataset(
        object_ids=object_ids,
        category_ids=categories[object_ids],
        state_ids=state_ids,
        splits=np.full(n_records, SPLIT_TRAIN),
        features=features,
        names=names,
        latents={int(o): latents[o].copy() for o in range(n_objects)},
        confuser_groups=[[int(m) for m in g] for g in groups],
    )
    logger.info(f"Generated synthetic dataset (seed={config.seed}): {dataset.summary()}, "
                f"{sum(len(g) for g in groups)} objects in {len(groups)} confuser groups")
    return dataset
