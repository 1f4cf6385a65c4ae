from src.curriculum.schedule import (SCHEDULE_PRESETS, CurriculumConfig, StrategyId, partitions_for_epoch,
                                     select_strategy)
from src.curriculum.samplers import (PairBatch, partners_s1, partners_s2, partners_s3, sample_pairs,
                                     sample_pairs_S1, sample_pairs_S2, sample_pairs_S3, sample_views)
