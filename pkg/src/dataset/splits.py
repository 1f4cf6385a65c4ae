# src/dataset/splits.py
"""
Split-by-state protocol: whole states of every object go to either train or test.
"""

import logging
import math

import numpy as np

from src.dataset.records import SPLIT_TEST, SPLIT_TRAIN
from src.utils.errors import DatasetError

logger = logging.getLogger(__name__)


def choose_test_states(states, test_ratio, rng):
    """Picks ceil(test_ratio * n) of the sorted `states`, keeping at least one for train."""
    states = sorted(states)
    n_test = math.ceil(test_ratio * len(states))
    if n_test >= len(states):
        logger.warning(f"test_ratio {test_ratio} would move all {len(states)} states to test; "
                       f"keeping one train state")
        n_test = len(states) - 1
    order = rng.permutation(len(states))
    return sorted(states[i] for i in order[:n_test])


def split_by_state(dataset, test_ratio, seed=0):
    """Returns a copy of `dataset` with per-object whole states assigned to test.

    Objects are visited in ascending id order; each consumes one
    `rng.permutation(n_states)` draw from `np.random.default_rng(seed)`.
    """
    if not 0.0 <= test_ratio <= 1.0:
        raise DatasetError(f"test_ratio must be in [0, 1], got {test_ratio}")
    rng = np.random.default_rng(seed)
    splits = np.full(dataset.n_records, SPLIT_TRAIN, dtype=np.uint8)

    for o, rows in dataset.rows_by_object().items():
        states = np.unique(dataset.state_ids[rows]).tolist()
        if len(states) < 2:
            raise DatasetError(
                f"Object {o} has a single state ({states[0]}); split-by-state needs at least two "
                f"states per object so train and test see different states")
        test_states = choose_test_states(states, test_ratio, rng)
        splits[rows[np.isin(dataset.state_ids[rows], test_states)]] = SPLIT_TEST

    result = dataset.with_splits(splits)
    result.validate()
    logger.info(f"Split by state with ratio {test_ratio}: {result.summary()}")
    return result
