# src/curriculum/schedule.py
"""
Sampling-strategy schedule and the partition ramp f(N_e) = clamp(c * N_e, n_min, n_max).
"""

import logging
from dataclasses import dataclass, field
from enum import Enum

from src.losses.joint import OBJECTIVE_CAT, OBJECTIVE_PART

logger = logging.getLogger(__name__)


class StrategyId(str, Enum):
    S1_RANDOM_SAME_CAT = 'S1'
    S2_NEIGHBORS_SAME_CAT = 'S2'
    S3_NEIGHBORS_ANY_CAT = 'S3'

    @property
    def objective(self):
        """S1/S2 batches train the same-category objective, S3 the same-partition one."""
        return OBJECTIVE_PART if self is StrategyId.S3_NEIGHBORS_ANY_CAT else OBJECTIVE_CAT

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        text = str(value).strip()
        for member in cls:
            if text in (member.value, member.name, member.name.lower()) or text.upper() == member.value:
                return member
        lowered = text.lower()
        for member in cls:
            if lowered.startswith(member.value.lower() + '_'):
                return member
        raise ValueError(f"Unknown sampling strategy '{value}'")


SCHEDULE_PRESETS = {
    'random': ['S1'],
    'curriculum': ['S1', 'S2', 'S3'],
    's1s2': ['S1', 'S2'],
    's1s3': ['S1', 'S3'],
}


@dataclass
class CurriculumConfig:
    slope: int = 2
    n_min: int = 8
    n_max: int = 100
    top_k: int = 5
    views: int = 4
    schedule: list = field(default_factory=lambda: list(SCHEDULE_PRESETS['curriculum']))
    nn_method: str = 'auto'
    nprobe: int = 3
    kmeans_iters: int = 20

    def __post_init__(self):
        if isinstance(self.schedule, str):
            if self.schedule not in SCHEDULE_PRESETS:
                raise ValueError(f"Unknown schedule preset '{self.schedule}', "
                                 f"expected one of {sorted(SCHEDULE_PRESETS)}")
            self.schedule = list(SCHEDULE_PRESETS[self.schedule])
        self.schedule = [StrategyId.parse(s) for s in self.schedule]

    def validate(self):
        if self.slope < 1:
            raise ValueError(f"slope must be >= 1, got {self.slope}")
        if self.n_min < 1 or self.n_min > self.n_max:
            raise ValueError(f"need 1 <= n_min <= n_max, got n_min={self.n_min}, n_max={self.n_max}")
        if self.top_k < 1:
            raise ValueError(f"top_k must be >= 1, got {self.top_k}")
        if self.views < 1:
            raise ValueError(f"views must be >= 1, got {self.views}")
        if not self.schedule:
            raise ValueError("schedule must name at least one strategy")
        if self.nn_method not in ('exact', 'ivf', 'auto'):
            raise ValueError(f"nn_method must be exact, ivf or auto, got '{self.nn_method}'")
        if self.kmeans_iters < 1 or self.nprobe < 1:
            raise ValueError("kmeans_iters and nprobe must be >= 1")
        return self


def partitions_for_epoch(epoch, config, n_objects=None):
    """f(N_e) = max(min(c * N_e, n_max), n_min), never more cells than objects."""
    if epoch < 1:
        raise ValueError(f"epoch must be >= 1, got {epoch}")
    k = max(min(config.slope * epoch, config.n_max), config.n_min)
    if n_objects is not None and k > n_objects:
        logger.debug(f"Clamping {k} partitions to the {n_objects} available objects")
        k = n_objects
    return k


def select_strategy(epoch, config):
    """Epoch 1 samples at random within categories; later epochs cycle through the schedule."""
    if epoch < 1:
        raise ValueError(f"epoch must be >= 1, got {epoch}")
    if epoch == 1:
        return StrategyId.S1_RANDOM_SAME_CAT
    return config.schedule[(epoch - 2) % len(config.schedule)]
