# src/dataset/feature_io.py
"""
Binary feature file reader/writer plus the JSON companion manifest.

Layout (little-endian):
    header  : magic b"OWSF" | u32 version=1 | u32 n_records | u32 F
    record  : u32 object_id | u32 category_id | u32 state_id | u8 split | F x f32
A record therefore occupies 13 + 4F bytes (no padding).
"""

import json
import logging
import os
import struct

import numpy as np

from src.dataset.records import Dataset
from src.utils.errors import DimensionMismatchError, FeatureFormatError, TruncatedFileError

logger = logging.getLogger(__name__)

MAGIC = b'OWSF'
VERSION = 1
HEADER = struct.Struct('<4sIII')


def record_dtype(feature_dim):
    return np.dtype([
        ('object_id', '<u4'),
        ('category_id', '<u4'),
        ('state_id', '<u4'),
        ('split', 'u1'),
        ('feature', '<f4', (feature_dim,)),
    ])


def manifest_path_for(path):
    return f"{path}.manifest.json"


def write_features(path, dataset):
    """Writes `dataset` to `path` and its manifest to `path + '.manifest.json'`."""
    F = dataset.feature_dim
    table = np.empty(dataset.n_records, dtype=record_dtype(F))
    table['object_id'] = dataset.object_ids
    table['category_id'] = dataset.category_ids
    table['state_id'] = dataset.state_ids
    table['split'] = dataset.splits
    table['feature'] = dataset.features

    out_dir = os.path.dirname(str(path))
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
    with open(path, 'wb') as f:
        f.write(HEADER.pack(MAGIC, VERSION, dataset.n_records, F))
        f.write(table.tobytes())

    manifest = {
        'objects': {str(o): {'category_id': c, 'name': dataset.names.get(o)}
                    for o, c in dataset.manifest.items()},
        'confuser_groups': dataset.confuser_groups,
    }
    with open(manifest_path_for(path), 'w', encoding='utf-8') as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write('\n')
    logger.info(f"Wrote {dataset.n_records} records (F={F}) to {path}")
    return path


def read_features(path, expected_dim=None):
    """Reads a feature file; the companion manifest is optional.

    Raises FeatureFormatError (magic/version), TruncatedFileError (short file) or
    DimensionMismatchError (F differs from `expected_dim`, or trailing bytes that
    do not fit the declared F).
    """
    with open(path, 'rb') as f:
        blob = f.read()

    if len(blob) < HEADER.size:
        raise TruncatedFileError(f"{path}: {len(blob)} bytes is shorter than the {HEADER.size}-byte header")
    magic, version, n_records, F = HEADER.unpack_from(blob, 0)
    if magic != MAGIC:
        raise FeatureFormatError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise FeatureFormatError(f"{path}: unsupported version {version}, expected {VERSION}")
    if expected_dim is not None and F != expected_dim:
        raise DimensionMismatchError(f"{path}: feature dimension {F}, expected {expected_dim}")

    dtype = record_dtype(F)
    body = len(blob) - HEADER.size
    needed = n_records * dtype.itemsize
    if body < needed:
        raise TruncatedFileError(f"{path}: {body} payload bytes, header declares {n_records} records "
                                 f"of {dtype.itemsize} bytes ({needed} bytes)")
    if body > needed:
        raise DimensionMismatchError(f"{path}: {body - needed} trailing bytes do not fit F={F}")

    table = np.frombuffer(blob, dtype=dtype, count=n_records, offset=HEADER.size)
    names, groups = {}, []
    manifest_path = manifest_path_for(path)
    if os.path.exists(manifest_path):
        with open(manifest_path, 'r', encoding='utf-8') as f:
            manifest = json.load(f)
        names = {int(o): entry.get('name') for o, entry in manifest.get('objects', {}).items()
                 if entry.get('name') is not None}
        groups = manifest.get('confuser_groups', [])

    dataset = Dataset(
        object_ids=table['object_id'].copy(),
        category_ids=table['category_id'].copy(),
        state_ids=table['state_id'].copy(),
        splits=table['split'].copy(),
        features=table['feature'].copy(),
        names=names,
        confuser_groups=groups,
    )
    dataset.validate(require_train=False)
    logger.info(f"Read {path}: {dataset.summary()}")
    return dataset
