# src/utils/config_loader.py
"""
Utility functions to load configuration files and turn them into typed configs.

Inputs:
- Path to a YAML or JSON configuration file (JSON is valid YAML)
- A dataclass type describing the expected section

Outputs:
- A dictionary (load_config) or a validated dataclass instance (build_config)

Raises:
- FileNotFoundError if the config file doesn't exist.
- ConfigError if the file is not valid YAML/JSON, a required key is missing,
  an unknown key is present, or a value fails validation.
"""

import dataclasses
import logging
import os
import typing

import yaml
from dotenv import load_dotenv

from src.utils.errors import ConfigError

logger = logging.getLogger(__name__)

SEED_ENV_VAR = 'OWSC_SEED'


def load_config(config_path='config.yaml'):
    """Loads a configuration mapping from a YAML (or JSON) file."""
    if not os.path.exists(config_path):
        logger.error(f"Configuration file not found: {config_path}")
        raise FileNotFoundError(f"Configuration file not found: {config_path}")

    try:
        with open(config_path, 'r', encoding='utf-8') as f:
            config = yaml.safe_load(f)
    except yaml.YAMLError as e:
        logger.error(f"Error parsing configuration file {config_path}: {e}")
        raise ConfigError(f"Could not parse {config_path}: {e}") from e

    if config is None:
        config = {}
    if not isinstance(config, dict):
        raise ConfigError(f"Top level of {config_path} must be a mapping, got {type(config).__name__}")
    logger.info(f"Configuration loaded successfully from {config_path}")
    return config


def _is_dataclass_type(tp):
    return isinstance(tp, type) and dataclasses.is_dataclass(tp)


def build_config(cls, mapping, section=''):
    """Builds dataclass `cls` from `mapping`, recursing into nested dataclass fields.

    Missing required keys and unknown keys raise ConfigError naming the dotted path.
    The instance's validate() method runs last when present.
    """
    if mapping is None:
        mapping = {}
    if not isinstance(mapping, dict):
        raise ConfigError(f"'{section or cls.__name__}' must be a mapping")

    hints = typing.get_type_hints(cls)
    fields = {f.name: f for f in dataclasses.fields(cls) if f.init}
    prefix = f"{section}." if section else ''

    unknown = sorted(set(mapping) - set(fields))
    if unknown:
        raise ConfigError(f"Unknown config key '{prefix}{unknown[0]}'")

    kwargs = {}
    for name, field in fields.items():
        required = (field.default is dataclasses.MISSING
                    and field.default_factory is dataclasses.MISSING)
        if name not in mapping:
            if required:
                raise ConfigError(f"Missing required config key '{prefix}{name}'")
            continue
        value = mapping[name]
        field_type = hints.get(name)
        if _is_dataclass_type(field_type):
            value = build_config(field_type, value, f"{prefix}{name}")
        kwargs[name] = value

    try:
        instance = cls(**kwargs)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"Invalid '{section or cls.__name__}' config: {e}") from e

    validate = getattr(instance, 'validate', None)
    if callable(validate):
        try:
            validate()
        except ValueError as e:
            raise ConfigError(f"Invalid '{section or cls.__name__}' config: {e}") from e
    return instance


def config_to_dict(config):
    """Plain-dict view of a (possibly nested) config dataclass."""
    return dataclasses.asdict(config)


def resolve_seed(file_seed, flag_seed=None, env_path=None):
    """Seed precedence: explicit flag > OWSC_SEED environment variable > config file."""
    load_dotenv(dotenv_path=env_path)
    if flag_seed is not None:
        logger.info(f"Seed {flag_seed} taken from command-line flag")
        return int(flag_seed)
    env_value = os.environ.get(SEED_ENV_VAR)
    if env_value not in (None, ''):
        try:
            seed = int(env_value)
        except ValueError as e:
            raise ConfigError(f"{SEED_ENV_VAR} must be an integer, got '{env_value}'") from e
        logger.info(f"Seed {seed} taken from {SEED_ENV_VAR}")
        return seed
    return int(file_seed)
