# src/evaluator/export.py
"""Per-image embedding export (both spaces) for external plotting."""

import csv
import logging
import os

import numpy as np

from src.encoder.dual_encoder import encode_images

logger = logging.getLogger(__name__)


def export_columns(dim):
    return ['object_id', 'category_id', 'state_id', 'split', 'space'] + [f'dim_{i}' for i in range(dim)]


def export_embeddings(params, dataset, path):
    """Writes two rows per image (obj then cat) in dataset row order; returns the row count."""
    obj, cat = encode_images(params, dataset.features)
    out_dir = os.path.dirname(str(path))
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
    n_rows = 0
    with open(path, 'w', encoding='utf-8', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(export_columns(params.config.embed_dim))
        for i, record in enumerate(dataset.records):
            labels = [record.object_id, record.category_id, record.state_id, record.split]
            for space, emb in (('obj', obj), ('cat', cat)):
                writer.writerow(labels + [space] + [format(float(v), '.9g') for v in emb[i]])
                n_rows += 1
    logger.info(f"Exported {n_rows} embedding rows to {path}")
    return n_rows


def read_embeddings(path):
    """Parses an export back into ({column: label list}, {space: N x D array})."""
    labels = {name: [] for name in ('object_id', 'category_id', 'state_id', 'split', 'space')}
    values = []
    with open(path, 'r', encoding='utf-8', newline='') as f:
        reader = csv.reader(f)
        header = next(reader)
        n_label_cols = len(labels)
        for row in reader:
            for name, value in zip(header[:n_label_cols], row[:n_label_cols]):
                labels[name].append(value if name in ('split', 'space') else int(value))
            values.append([float(v) for v in row[n_label_cols:]])
    matrix = np.asarray(values, dtype=np.float64)
    spaces = np.asarray(labels['space'])
    return labels, {space: matrix[spaces == space] for space in ('obj', 'cat')}
