"""Shared fixtures: small synthetic datasets and encoder configs."""

import numpy as np
import pytest

from src.curriculum.schedule import CurriculumConfig
from src.dataset.splits import split_by_state
from src.dataset.synthetic import SynthConfig, generate
from src.encoder.params import EncoderConfig, init_params
from src.trainer.training_loop import TrainConfig


def make_synth_config(**overrides):
    values = dict(n_categories=2, objects_per_category=4, states_per_object=3, views_per_state=2,
                  feature_dim=8, seed=0)
    values.update(overrides)
    return SynthConfig(**values)


def make_train_config(**overrides):
    values = dict(
        epochs=3,
        pairs_per_minibatch=4,
        learning_rate=1e-3,
        lr_halving_period=2,
        checkpoint_period=2,
        seed=0,
        curriculum=CurriculumConfig(views=2, top_k=2),
        encoder=EncoderConfig(embed_dim=8, n_attention_layers=1, n_heads=1, dropout_rate=0.25),
    )
    values.update(overrides)
    return TrainConfig(**values)


@pytest.fixture
def synth_config():
    return make_synth_config()


@pytest.fixture
def toy_dataset(synth_config):
    """2 categories x 4 objects, 3 states x 2 views, one test state per object."""
    return split_by_state(generate(synth_config), 0.25, seed=0)


@pytest.fixture
def train_config():
    return make_train_config()


@pytest.fixture
def small_params():
    config = EncoderConfig(input_dim=8, embed_dim=8, n_attention_layers=1, n_heads=2, dropout_rate=0.0, seed=3)
    return init_params(config)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
