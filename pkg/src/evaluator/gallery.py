# src/evaluator/gallery.py
"""Eval-mode embeddings of one split: per-image rows plus one aggregate per object."""

import logging
from dataclasses import dataclass

import numpy as np

from src.encoder.dual_encoder import encode, encode_images
from src.utils.errors import EvaluationError

logger = logging.getLogger(__name__)


@dataclass
class Gallery:
    split: str
    rows: np.ndarray
    obj: np.ndarray
    cat: np.ndarray
    object_labels: np.ndarray
    category_labels: np.ndarray
    aggregate_ids: np.ndarray
    aggregate_categories: np.ndarray
    obj_aggregates: np.ndarray
    cat_aggregates: np.ndarray

    def per_image(self, space):
        """(embeddings, labels) of every image in `space` ('obj' or 'cat')."""
        if space == 'obj':
            return self.obj, self.object_labels
        return self.cat, self.category_labels

    def aggregates(self, space):
        """(aggregate embeddings, labels), one row per object in ascending id order."""
        if space == 'obj':
            return self.obj_aggregates, self.aggregate_ids
        return self.cat_aggregates, self.aggregate_categories

    def __len__(self):
        return len(self.rows)


def build_gallery(params, dataset, split):
    rows = dataset.split_rows(split)
    if len(rows) == 0:
        raise EvaluationError(f"Split '{split}' has no images to build a gallery from")

    obj, cat = encode_images(params, dataset.features[rows])
    by_object = dataset.rows_by_object(split)
    manifest = dataset.manifest
    aggregate_ids = np.fromiter(by_object.keys(), dtype=np.int64, count=len(by_object))
    obj_aggregates = np.empty((len(by_object), params.config.embed_dim))
    cat_aggregates = np.empty_like(obj_aggregates)
    for i, object_rows in enumerate(by_object.values()):
        embedding = encode(params, dataset.features[object_rows])
        obj_aggregates[i] = embedding.obj_aggregate
        cat_aggregates[i] = embedding.cat_aggregate

    logger.debug(f"Gallery '{split}': {len(rows)} images, {len(aggregate_ids)} objects")
    return Gallery(
        split=split,
        rows=rows,
        obj=obj,
        cat=cat,
        object_labels=dataset.object_ids[rows].astype(np.int64),
        category_labels=dataset.category_ids[rows].astype(np.int64),
        aggregate_ids=aggregate_ids,
        aggregate_categories=np.asarray([manifest[o] for o in aggregate_ids.tolist()], dtype=np.int64),
        obj_aggregates=obj_aggregates,
        cat_aggregates=cat_aggregates,
    )
