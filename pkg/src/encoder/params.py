# src/encoder/params.py
"""
Encoder configuration, parameter initialisation and the OWSP checkpoint format.

Checkpoint layout (little-endian):
    b"OWSP" | u32 version=1 | u32 n | n bytes of sorted-key UTF-8 JSON (EncoderConfig)
    then every tensor in param_names(config) order as raw f32.
"""

import json
import logging
import math
import os
import struct
from dataclasses import asdict, dataclass, fields

import numpy as np

from src.utils.errors import CheckpointError

logger = logging.getLogger(__name__)

SPACES = ('obj', 'cat')
CHECKPOINT_MAGIC = b'OWSP'
CHECKPOINT_VERSION = 1
_HEADER = struct.Struct('<4sII')


@dataclass
class EncoderConfig:
    input_dim: int = None
    embed_dim: int = 64
    n_attention_layers: int = 2
    n_heads: int = 1
    dropout_rate: float = 0.25
    seed: int = 0
    trunk_dim: int = None

    def validate(self):
        if self.input_dim is not None and self.input_dim < 1:
            raise ValueError(f"input_dim must be >= 1, got {self.input_dim}")
        if self.embed_dim < 1 or self.n_heads < 1 or self.n_attention_layers < 1:
            raise ValueError("embed_dim, n_heads and n_attention_layers must be >= 1")
        if self.embed_dim % self.n_heads != 0:
            raise ValueError(f"embed_dim {self.embed_dim} is not divisible by n_heads {self.n_heads}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")
        if self.trunk_dim is not None and self.trunk_dim < 1:
            raise ValueError(f"trunk_dim must be >= 1, got {self.trunk_dim}")
        return self

    @property
    def hidden_dim(self):
        return self.trunk_dim or self.embed_dim


def param_shapes(config):
    """Ordered {name: shape}; this order is the checkpoint order."""
    F, H, D = config.input_dim, config.hidden_dim, config.embed_dim
    shapes = {'trunk.weight': (F, H), 'trunk.bias': (H,)}
    for space in SPACES:
        shapes[f'{space}.input.weight'] = (H, D)
        shapes[f'{space}.input.bias'] = (D,)
        for layer in range(config.n_attention_layers):
            p = f'{space}.layer{layer}'
            for proj in ('wq', 'wk', 'wv', 'wo'):
                shapes[f'{p}.{proj}'] = (D, D)
            shapes[f'{p}.ln1.gain'] = (D,)
            shapes[f'{p}.ln1.bias'] = (D,)
            shapes[f'{p}.ff.weight'] = (D, D)
            shapes[f'{p}.ff.bias'] = (D,)
            shapes[f'{p}.ln2.gain'] = (D,)
            shapes[f'{p}.ln2.bias'] = (D,)
    return shapes


def param_names(config):
    return list(param_shapes(config))


@dataclass
class ParamSet:
    config: EncoderConfig
    tensors: dict

    def copy(self):
        return ParamSet(self.config, {k: v.copy() for k, v in self.tensors.items()})

    def float64(self):
        return {k: np.asarray(v, dtype=np.float64) for k, v in self.tensors.items()}

    def zeros_like(self):
        return {k: np.zeros(v.shape, dtype=np.float64) for k, v in self.tensors.items()}

    def __getitem__(self, name):
        return self.tensors[name]

    def allclose(self, other, atol=0.0):
        return (self.tensors.keys() == other.tensors.keys()
                and all(np.allclose(v, other.tensors[k], rtol=0.0, atol=atol) for k, v in self.tensors.items()))


def init_params(config, dtype=np.float32):
    """Seeded init: weights ~ N(0, 1/fan_in), biases 0, layer-norm gains 1."""
    config.validate()
    if config.input_dim is None:
        raise ValueError("EncoderConfig.input_dim must be set before initialising parameters")
    rng = np.random.default_rng(config.seed)
    tensors = {}
    for name, shape in param_shapes(config).items():
        if name.endswith('.gain'):
            tensors[name] = np.ones(shape, dtype=dtype)
        elif len(shape) == 1:
            tensors[name] = np.zeros(shape, dtype=dtype)
        else:
            tensors[name] = (rng.normal(size=shape) / math.sqrt(shape[0])).astype(dtype)
    logger.debug(f"Initialised {len(tensors)} tensors "
                 f"({sum(t.size for t in tensors.values())} parameters) with seed {config.seed}")
    return ParamSet(config, tensors)


def save_checkpoint(path, params):
    config_blob = json.dumps(asdict(params.config), sort_keys=True).encode('utf-8')
    out_dir = os.path.dirname(str(path))
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
    with open(path, 'wb') as f:
        f.write(_HEADER.pack(CHECKPOINT_MAGIC, CHECKPOINT_VERSION, len(config_blob)))
        f.write(config_blob)
        for name in param_names(params.config):
            f.write(np.ascontiguousarray(params.tensors[name], dtype='<f4').tobytes())
    logger.info(f"Checkpoint written to {path}")
    return path


def load_checkpoint(path):
    with open(path, 'rb') as f:
        blob = f.read()
    if len(blob) < _HEADER.size:
        raise CheckpointError(f"{path}: file too short for a checkpoint header")
    magic, version, n = _HEADER.unpack_from(blob, 0)
    if magic != CHECKPOINT_MAGIC:
        raise CheckpointError(f"{path}: bad magic {magic!r}, expected {CHECKPOINT_MAGIC!r}")
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {version}")
    offset = _HEADER.size
    try:
        raw = json.loads(blob[offset:offset + n].decode('utf-8'))
        known = {f.name for f in fields(EncoderConfig)}
        config = EncoderConfig(**{k: v for k, v in raw.items() if k in known}).validate()
    except (ValueError, TypeError) as e:
        raise CheckpointError(f"{path}: unreadable encoder config: {e}") from e
    offset += n

    tensors = {}
    for name, shape in param_shapes(config).items():
        count = int(np.prod(shape))
        if offset + 4 * count > len(blob):
            raise CheckpointError(f"{path}: truncated at tensor '{name}'")
        tensors[name] = np.frombuffer(blob, dtype='<f4', count=count, offset=offset).reshape(shape).astype(np.float32)
        offset += 4 * count
    if offset != len(blob):
        raise CheckpointError(f"{path}: {len(blob) - offset} unexpected trailing bytes")
    logger.info(f"Loaded checkpoint {path} (F={config.input_dim}, D={config.embed_dim}, "
                f"{config.n_attention_layers} layers x {config.n_heads} heads)")
    return ParamSet(config, tensors)
