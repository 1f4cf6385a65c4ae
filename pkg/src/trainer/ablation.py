# src/trainer/ablation.py
"""
Ablation runs: train one model per arm from a shared base config and score it.

An arm is a mapping with a `name` and overrides for `schedule` (a preset name
or strategy list), `n_attention_layers`, `n_heads` and/or `seed`.
"""

import dataclasses
import logging
import os
from dataclasses import dataclass

from src.curriculum.schedule import CurriculumConfig
from src.evaluator.tasks import run_eight_tasks
from src.trainer.training_loop import run_training
from src.utils.errors import ConfigError

logger = logging.getLogger(__name__)

ARM_KEYS = {'name', 'schedule', 'n_attention_layers', 'n_heads', 'seed'}

SCHEDULE_ARMS = [{'name': 'random', 'schedule': 'random'},
                 {'name': 'curriculum', 'schedule': 'curriculum'}]
ARCHITECTURE_ARMS = [{'name': f'L{layers}H{heads}', 'n_attention_layers': layers, 'n_heads': heads}
                     for layers in (1, 2) for heads in (1, 2, 4, 8)]


@dataclass
class AblationResult:
    name: str
    config: object
    report: object
    final_metrics: object


def arm_config(base, arm):
    unknown = sorted(set(arm) - ARM_KEYS)
    if unknown:
        raise ConfigError(f"Unknown ablation arm key '{unknown[0]}'")
    config = dataclasses.replace(base)
    if 'schedule' in arm:
        try:
            curriculum = CurriculumConfig(**{**dataclasses.asdict(base.curriculum), 'schedule': arm['schedule']})
        except ValueError as e:
            raise ConfigError(f"Arm '{arm.get('name')}': {e}") from e
        config = dataclasses.replace(config, curriculum=curriculum)
    encoder_overrides = {k: arm[k] for k in ('n_attention_layers', 'n_heads') if k in arm}
    if encoder_overrides:
        config = dataclasses.replace(config, encoder=dataclasses.replace(base.encoder, **encoder_overrides))
    if 'seed' in arm:
        encoder = dataclasses.replace(config.encoder, seed=arm['seed'])
        config = dataclasses.replace(config, seed=arm['seed'], encoder=encoder)
    try:
        config.validate()
    except ValueError as e:
        raise ConfigError(f"Arm '{arm.get('name')}': {e}") from e
    return config


def run_ablation(base_config, dataset, arms, out_dir=None, classifier='nn'):
    """Trains and evaluates every arm in order; returns a list of AblationResult."""
    results = []
    for i, arm in enumerate(arms):
        name = arm.get('name', f'arm{i}')
        config = arm_config(base_config, arm)
        arm_dir = os.path.join(out_dir, name) if out_dir else None
        logger.info(f"Ablation arm '{name}' ({i + 1}/{len(arms)})")
        params, metrics = run_training(config, dataset, out_dir=arm_dir)
        report = run_eight_tasks(params, dataset, classifier=classifier)
        results.append(AblationResult(name=name, config=config, report=report, final_metrics=metrics[-1]))
    return results
