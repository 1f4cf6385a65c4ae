from src.trainer.optimizer import Adam, lr_at
from src.trainer.diagnostics import diagnostics
from src.trainer.training_loop import (METRICS_COLUMNS, EpochMetrics, TrainConfig, TrainState, load_training_state,
                                       object_aggregates, full_scale_preset, run_training, save_training_state,
                                       train_epoch)
from src.trainer.ablation import ARCHITECTURE_ARMS, SCHEDULE_ARMS, AblationResult, run_ablation
