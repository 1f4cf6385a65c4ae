# src/trainer/training_loop.py
"""
Curriculum training loop.

Each epoch: pick the strategy, sample one pair per train object (S2/S3 use
the object-space aggregates of the current parameters), shuffle the pairs
globally, then run encode + joint loss + backward + Adam per minibatch.
Diagnostics are computed at the end of the epoch on the train images in
eval mode.

All randomness of epoch N_e comes from default_rng([seed, N_e]), so a run
resumed from a checkpoint continues exactly as the uninterrupted run.
"""

import csv
import dataclasses
import json
import logging
import os
from dataclasses import dataclass, field

import numpy as np

from src.curriculum.samplers import sample_pairs
from src.curriculum.schedule import CurriculumConfig, StrategyId, select_strategy
from src.encoder.dual_encoder import backward, encode, encode_images
from src.encoder.params import EncoderConfig, init_params, load_checkpoint, save_checkpoint
from src.losses.joint import JointObjective
from src.losses.margin_losses import Margins
from src.trainer.diagnostics import diagnostics
from src.trainer.optimizer import Adam, lr_at
from src.utils.errors import CheckpointError, DimensionMismatchError, NonFiniteLossError

logger = logging.getLogger(__name__)

METRICS_COLUMNS = ['epoch', 'strategy', 'l_piobj', 'l_picat', 'l_cat', 'l_joint', 'tau_info',
                   'd_max_intra', 'd_min_inter', 'rho', 'lr']
METRICS_FILE = 'metrics.csv'
FINAL_CHECKPOINT = 'checkpoint_final.owsp'


@dataclass
class TrainConfig:
    epochs: int = 30
    pairs_per_minibatch: int = 8
    learning_rate: float = 1e-3
    lr_halving_period: int = 10
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    checkpoint_period: int = 10
    margins: Margins = field(default_factory=Margins)
    curriculum: CurriculumConfig = field(default_factory=CurriculumConfig)
    encoder: EncoderConfig = field(default_factory=EncoderConfig)

    def validate(self):
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.pairs_per_minibatch < 1 or self.lr_halving_period < 1 or self.checkpoint_period < 1:
            raise ValueError("pairs_per_minibatch, lr_halving_period and checkpoint_period must be >= 1")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0) or self.eps <= 0:
            raise ValueError("Adam needs betas in [0, 1) and eps > 0")
        self.margins.validate()
        self.curriculum.validate()
        self.encoder.validate()
        return self


def full_scale_preset():
    """Full-scale settings: 150 epochs, lr 5e-5 halved every 30, 12 views, 2048-d embeddings."""
    return TrainConfig(
        epochs=150,
        learning_rate=5e-5,
        lr_halving_period=30,
        checkpoint_period=30,
        curriculum=CurriculumConfig(views=12),
        encoder=EncoderConfig(embed_dim=2048),
    )


@dataclass
class EpochMetrics:
    epoch: int
    strategy: str
    l_piobj: float
    l_picat: float
    l_cat: float
    l_joint: float
    tau_info: float
    d_max_intra: float
    d_min_inter: float
    rho: float
    lr: float

    def csv_row(self):
        row = []
        for name in METRICS_COLUMNS:
            value = getattr(self, name)
            if value is None:
                row.append('')
            elif isinstance(value, float):
                row.append(format(value, '.9g'))
            else:
                row.append(str(value))
        return row

    @classmethod
    def from_row(cls, row):
        values = dict(zip(METRICS_COLUMNS, row))
        kwargs = {}
        for f in dataclasses.fields(cls):
            raw = values[f.name]
            if f.name == 'strategy':
                kwargs[f.name] = raw
            elif f.name == 'epoch':
                kwargs[f.name] = int(raw)
            else:
                kwargs[f.name] = None if raw == '' else float(raw)
        return cls(**kwargs)


@dataclass
class TrainState:
    params: object
    optimizer: Adam
    epoch: int = 0
    metrics: list = field(default_factory=list)


def object_aggregates(params, dataset):
    """{object_id: object-space aggregate over all of the object's train images} (eval mode)."""
    aggregates = {}
    for object_id, rows in dataset.rows_by_object('train').items():
        aggregates[object_id] = encode(params, dataset.features[rows]).obj_aggregate
    return aggregates


def _minibatches(pairs, order, size):
    for start in range(0, len(order), size):
        yield [pairs[i] for i in order[start:start + size]]


def train_epoch(state, dataset, epoch, config):
    """Runs epoch `epoch` (1-based) in place on `state`; returns its EpochMetrics."""
    rng = np.random.default_rng([config.seed, epoch])
    strategy = select_strategy(epoch, config.curriculum)
    aggregates = None
    if strategy is not StrategyId.S1_RANDOM_SAME_CAT:
        aggregates = object_aggregates(state.params, dataset)
    batch = sample_pairs(strategy, dataset, epoch, config.curriculum, rng, object_aggregates=aggregates)

    categories = dataset.manifest
    lr = lr_at(epoch, config)
    order = rng.permutation(len(batch.pairs))
    breakdowns = []
    for step, pairs in enumerate(_minibatches(batch.pairs, order, config.pairs_per_minibatch)):
        objects = sorted({o for pair in pairs for o in pair})
        features = {o: dataset.features[batch.images[o]] for o in objects}
        objective = JointObjective(pairs, categories, config.margins, strategy.objective, strategy=strategy)
        try:
            value, grads, _ = backward(state.params, features, objective, train_mode=True, rng=rng)
        except NonFiniteLossError as e:
            e.payload.update({'epoch': epoch, 'minibatch': step, 'strategy': strategy.value, 'pairs': pairs})
            logger.error(f"Epoch {epoch}: non-finite loss in minibatch {step}", exc_info=True)
            raise
        state.optimizer.step(state.params.tensors, grads, lr=lr)
        breakdowns.extend(objective.last.per_pair)
        logger.debug(f"Epoch {epoch} minibatch {step}: loss {value:.6f} over {len(pairs)} pairs")

    n = len(breakdowns)
    train_rows = dataset.split_rows('train')
    obj_embeddings, _ = encode_images(state.params, dataset.features[train_rows])
    d_max_intra, d_min_inter, rho = diagnostics(obj_embeddings, dataset.object_ids[train_rows])

    metrics = EpochMetrics(
        epoch=epoch,
        strategy=strategy.value,
        l_piobj=sum(b.l_piobj for b in breakdowns) / n,
        l_picat=sum(b.l_picat for b in breakdowns) / n,
        l_cat=sum(b.l_cat for b in breakdowns) / n,
        l_joint=sum(b.l_joint for b in breakdowns) / n,
        tau_info=sum(1 for b in breakdowns if b.informative) / n,
        d_max_intra=d_max_intra,
        d_min_inter=d_min_inter,
        rho=rho,
        lr=lr,
    )
    state.epoch = epoch
    state.metrics.append(metrics)
    logger.info(f"Epoch {epoch} [{strategy.value}] l_joint={metrics.l_joint:.4f} "
                f"tau_info={metrics.tau_info:.3f} rho={rho if rho is None else round(rho, 4)} lr={lr:.3g}"
                + (f" ({batch.n_fallback} singleton-cell fallbacks)" if batch.n_fallback else ''))
    return metrics


def state_path_for(checkpoint_path):
    return f"{checkpoint_path}.state.npz"


def write_metrics(path, metrics):
    with open(path, 'w', encoding='utf-8', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(METRICS_COLUMNS)
        for m in metrics:
            writer.writerow(m.csv_row())
    return path


def save_training_state(checkpoint_path, state):
    """Writes the encoder checkpoint plus the optimizer/metrics state next to it."""
    save_checkpoint(checkpoint_path, state.params)
    rows = json.dumps([m.csv_row() for m in state.metrics])
    arrays = state.optimizer.state_arrays()
    with open(state_path_for(checkpoint_path), 'wb') as f:
        np.savez(f, adam_t=np.int64(state.optimizer.t), epoch=np.int64(state.epoch),
                 metrics=np.array(rows), **arrays)
    return checkpoint_path


def load_training_state(checkpoint_path, config):
    params = load_checkpoint(checkpoint_path)
    optimizer = Adam(lr=config.learning_rate, beta1=config.beta1, beta2=config.beta2, epsilon=config.eps)
    state_path = state_path_for(checkpoint_path)
    if not os.path.exists(state_path):
        raise CheckpointError(f"Cannot resume from {checkpoint_path}: training state {state_path} not found")
    with np.load(state_path, allow_pickle=False) as data:
        arrays = {k: data[k] for k in data.files if k.startswith(('m.', 'v.'))}
        optimizer.load_state_arrays(arrays, int(data['adam_t']))
        epoch = int(data['epoch'])
        metrics = [EpochMetrics.from_row(r) for r in json.loads(data['metrics'].item())]
    logger.info(f"Resuming from {checkpoint_path} after epoch {epoch}")
    return TrainState(params=params, optimizer=optimizer, epoch=epoch, metrics=metrics)


def _encoder_config_for(config, dataset):
    encoder = config.encoder
    if encoder.input_dim is None:
        return dataclasses.replace(encoder, input_dim=dataset.feature_dim)
    if encoder.input_dim != dataset.feature_dim:
        raise DimensionMismatchError(f"Encoder expects F={encoder.input_dim}, features have F={dataset.feature_dim}")
    return encoder


def run_training(config, dataset, out_dir=None, resume=None):
    """Trains for config.epochs epochs; returns (ParamSet, [EpochMetrics]).

    With `out_dir`, writes metrics.csv after every epoch, a checkpoint every
    `checkpoint_period` epochs and checkpoint_final.owsp at the end.
    """
    config.validate()
    dataset.validate()
    if resume is not None:
        state = load_training_state(resume, config)
        if state.params.config.input_dim != dataset.feature_dim:
            raise DimensionMismatchError(f"Checkpoint {resume} expects F={state.params.config.input_dim}, "
                                         f"features have F={dataset.feature_dim}")
        if state.epoch > config.epochs:
            raise CheckpointError(f"Checkpoint {resume} is at epoch {state.epoch}, past the configured "
                                  f"{config.epochs} epochs")
    else:
        params = init_params(_encoder_config_for(config, dataset))
        optimizer = Adam(lr=config.learning_rate, beta1=config.beta1, beta2=config.beta2, epsilon=config.eps)
        state = TrainState(params=params, optimizer=optimizer)

    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
    logger.info(f"Training epochs {state.epoch + 1}..{config.epochs} on {dataset.summary()}")

    for epoch in range(state.epoch + 1, config.epochs + 1):
        train_epoch(state, dataset, epoch, config)
        if out_dir:
            write_metrics(os.path.join(out_dir, METRICS_FILE), state.metrics)
            if epoch % config.checkpoint_period == 0:
                save_training_state(os.path.join(out_dir, f"checkpoint_epoch{epoch:04d}.owsp"), state)

    if out_dir:
        write_metrics(os.path.join(out_dir, METRICS_FILE), state.metrics)
        save_training_state(os.path.join(out_dir, FINAL_CHECKPOINT), state)
    return state.params, state.metrics
