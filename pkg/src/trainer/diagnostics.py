# src/trainer/diagnostics.py
"""Compactness/separability of object-identity classes in the object space."""

import numpy as np

from src.annindex.distance import squared_distances


def diagnostics(embeddings, object_labels):
    """(d_max_intra, d_min_inter, rho) over per-image object embeddings (unsquared L2).

    rho is None when d_max_intra is 0 (every object collapsed to one point);
    d_min_inter is None when there is only one object.
    """
    embeddings = np.asarray(embeddings, dtype=np.float64)
    labels = np.asarray(object_labels)
    d = np.sqrt(squared_distances(embeddings, embeddings))
    same = labels[:, None] == labels[None, :]

    d_max_intra = float(d[same].max()) if same.any() else 0.0
    d_min_inter = float(d[~same].min()) if (~same).any() else None
    rho = d_min_inter / d_max_intra if d_min_inter is not None and d_max_intra > 0.0 else None
    return d_max_intra, d_min_inter, rho
