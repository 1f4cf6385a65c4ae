# src/dataset/records.py
"""
Columnar dataset of labelled feature vectors.

Records are stored as parallel numpy arrays (one row per image); `records`
gives the row view as FeatureRecord tuples.
"""

import logging
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from src.utils.errors import DatasetError

logger = logging.getLogger(__name__)

SPLIT_TRAIN = 0
SPLIT_TEST = 1
SPLIT_NAMES = {SPLIT_TRAIN: 'train', SPLIT_TEST: 'test'}
SPLIT_CODES = {name: code for code, name in SPLIT_NAMES.items()}


def split_code(split):
    if isinstance(split, str):
        if split not in SPLIT_CODES:
            raise DatasetError(f"Unknown split '{split}' (expected 'train' or 'test')")
        return SPLIT_CODES[split]
    return int(split)


class FeatureRecord(NamedTuple):
    object_id: int
    category_id: int
    state_id: int
    split: str
    feature: np.ndarray


@dataclass
class Dataset:
    object_ids: np.ndarray
    category_ids: np.ndarray
    state_ids: np.ndarray
    splits: np.ndarray
    features: np.ndarray
    names: dict = field(default_factory=dict)
    latents: dict = field(default_factory=dict)
    confuser_groups: list = field(default_factory=list)

    def __post_init__(self):
        self.object_ids = np.asarray(self.object_ids, dtype=np.uint32)
        self.category_ids = np.asarray(self.category_ids, dtype=np.uint32)
        self.state_ids = np.asarray(self.state_ids, dtype=np.uint32)
        self.splits = np.asarray(self.splits, dtype=np.uint8)
        self.features = np.ascontiguousarray(self.features, dtype=np.float32)
        if self.features.ndim != 2:
            raise DatasetError(f"features must be 2-D, got shape {self.features.shape}")
        n = self.features.shape[0]
        for name in ('object_ids', 'category_ids', 'state_ids', 'splits'):
            if getattr(self, name).shape != (n,):
                raise DatasetError(f"{name} has {getattr(self, name).shape[0]} rows, features have {n}")

    @property
    def n_records(self):
        return int(self.features.shape[0])

    @property
    def feature_dim(self):
        return int(self.features.shape[1])

    @property
    def manifest(self):
        """object_id -> category_id."""
        manifest = {}
        for o, c in zip(self.object_ids.tolist(), self.category_ids.tolist()):
            manifest.setdefault(o, c)
        return dict(sorted(manifest.items()))

    @property
    def n_objects(self):
        return len(np.unique(self.object_ids))

    @property
    def n_categories(self):
        return len(np.unique(self.category_ids))

    @property
    def records(self):
        return [
            FeatureRecord(int(o), int(c), int(s), SPLIT_NAMES[int(sp)], f)
            for o, c, s, sp, f in zip(self.object_ids, self.category_ids, self.state_ids,
                                      self.splits, self.features)
        ]

    def split_rows(self, split):
        return np.flatnonzero(self.splits == split_code(split))

    def rows_by_object(self, split=None):
        """object_id -> ascending row indices, optionally restricted to one split."""
        rows = np.arange(self.n_records) if split is None else self.split_rows(split)
        grouped = {}
        for row, o in zip(rows.tolist(), self.object_ids[rows].tolist()):
            grouped.setdefault(o, []).append(row)
        return {o: np.asarray(r, dtype=np.int64) for o, r in sorted(grouped.items())}

    def with_splits(self, splits):
        return Dataset(self.object_ids.copy(), self.category_ids.copy(), self.state_ids.copy(),
                       np.asarray(splits, dtype=np.uint8), self.features.copy(), names=dict(self.names),
                       latents=dict(self.latents), confuser_groups=list(self.confuser_groups))

    def validate(self, require_train=True):
        """Checks the label invariants; raises DatasetError on the first violation."""
        if self.n_records == 0:
            raise DatasetError("Dataset has no records")
        seen = {}
        for o, c in zip(self.object_ids.tolist(), self.category_ids.tolist()):
            if seen.setdefault(o, c) != c:
                raise DatasetError(f"Object {o} maps to categories {seen[o]} and {c}")
        if not np.all(np.isin(self.splits, list(SPLIT_NAMES))):
            raise DatasetError("Split codes must be 0 (train) or 1 (test)")

        train = self.splits == SPLIT_TRAIN
        train_pairs = set(zip(self.object_ids[train].tolist(), self.state_ids[train].tolist()))
        test_pairs = set(zip(self.object_ids[~train].tolist(), self.state_ids[~train].tolist()))
        overlap = train_pairs & test_pairs
        if overlap:
            o, s = sorted(overlap)[0]
            raise DatasetError(f"State {s} of object {o} appears in both train and test")

        if require_train:
            missing = set(seen) - {o for o, _ in train_pairs}
            if missing:
                raise DatasetError(f"Object {min(missing)} has no train records")
        return self

    def equals(self, other):
        return (isinstance(other, Dataset)
                and np.array_equal(self.object_ids, other.object_ids)
                and np.array_equal(self.category_ids, other.category_ids)
                and np.array_equal(self.state_ids, other.state_ids)
                and np.array_equal(self.splits, other.splits)
                and np.array_equal(self.features, other.features))

    def summary(self):
        return (f"{self.n_records} records, {self.n_objects} objects, {self.n_categories} categories, "
                f"F={self.feature_dim}, train={int(np.sum(self.splits == SPLIT_TRAIN))}, "
                f"test={int(np.sum(self.splits == SPLIT_TEST))}")
