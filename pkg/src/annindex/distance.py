# src/annindex/distance.py
"""Squared-L2 distance helpers shared by k-means, IVF and the exact kNN oracle."""

import numpy as np

# Rows per chunk keeps the (chunk, n, D) broadcast under a few tens of MB.
CHUNK_ROWS = 128


def squared_distances(a, b):
    """(len(a), len(b)) matrix of ||a_i - b_j||^2, computed by explicit differences."""
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(b, dtype=np.float64))
    out = np.empty((a.shape[0], b.shape[0]), dtype=np.float64)
    for start in range(0, a.shape[0], CHUNK_ROWS):
        diff = a[start:start + CHUNK_ROWS, None, :] - b[None, :, :]
        out[start:start + CHUNK_ROWS] = np.einsum('ijk,ijk->ij', diff, diff)
    return out


def as_id_matrix(embeddings):
    """Accepts {id: vector} or (ids, matrix); returns ascending int64 ids and float64 rows."""
    if isinstance(embeddings, dict):
        ids = np.asarray(sorted(embeddings), dtype=np.int64)
        matrix = np.asarray([embeddings[i] for i in ids.tolist()], dtype=np.float64)
        if matrix.size == 0:
            matrix = matrix.reshape(0, 0)
        return ids, matrix
    ids, matrix = embeddings
    ids = np.asarray(ids, dtype=np.int64)
    matrix = np.asarray(matrix, dtype=np.float64)
    order = np.argsort(ids, kind='stable')
    return ids[order], matrix[order]
