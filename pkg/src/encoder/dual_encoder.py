# src/encoder/dual_encoder.py
"""
Dual-head set encoder.

    h      = ReLU(X @ W_trunk + b_trunk)                      (V x H, shared)
    z_0    = h @ W_in[s] + b_in[s]                            (per space s in {obj, cat})
    block  : y = LN1(z + MHSA(z) @ W_o);  z' = LN2(y + ReLU(y @ W_ff + b_ff))
    output : per-view rows = z_L, aggregate = mean over views

Self-attention runs across the V views of one object, so per-view outputs are
permutation-equivariant and the aggregate is permutation-invariant.
"""

import logging
from dataclasses import dataclass

import numpy as np

from src.encoder import layers
from src.encoder.params import SPACES
from src.utils.errors import EncoderError, NonFiniteLossError

logger = logging.getLogger(__name__)


@dataclass
class DualEmbedding:
    obj_per_view: np.ndarray
    obj_aggregate: np.ndarray
    cat_per_view: np.ndarray
    cat_aggregate: np.ndarray

    @classmethod
    def zeros(cls, n_views, dim):
        return cls(np.zeros((n_views, dim)), np.zeros(dim), np.zeros((n_views, dim)), np.zeros(dim))

    def per_view(self, space):
        return self.obj_per_view if space == 'obj' else self.cat_per_view

    def aggregate(self, space):
        return self.obj_aggregate if space == 'obj' else self.cat_aggregate

    def is_finite(self):
        return all(np.all(np.isfinite(a)) for a in
                   (self.obj_per_view, self.obj_aggregate, self.cat_per_view, self.cat_aggregate))


def _head_forward(p, space, h, config, train_mode, rng):
    z = layers.linear_forward(h, p[f'{space}.input.weight'], p[f'{space}.input.bias'])
    caches = []
    for layer in range(config.n_attention_layers):
        pre = f'{space}.layer{layer}'
        att_out, att_cache = layers.self_attention_forward(
            z, p[f'{pre}.wq'], p[f'{pre}.wk'], p[f'{pre}.wv'], config.n_heads,
            config.dropout_rate, train_mode, rng)
        projected = att_out @ p[f'{pre}.wo']
        y, ln1_cache = layers.layer_norm_forward(z + projected, p[f'{pre}.ln1.gain'], p[f'{pre}.ln1.bias'])
        ff_pre = layers.linear_forward(y, p[f'{pre}.ff.weight'], p[f'{pre}.ff.bias'])
        ff = np.maximum(ff_pre, 0.0)
        z_next, ln2_cache = layers.layer_norm_forward(y + ff, p[f'{pre}.ln2.gain'], p[f'{pre}.ln2.bias'])
        caches.append((att_out, att_cache, ln1_cache, y, ff_pre, ln2_cache))
        z = z_next
    return z, caches


def forward(params, features, train_mode=False, rng=None):
    """Returns (DualEmbedding, cache) for one object's V x F feature rows."""
    x = np.atleast_2d(np.asarray(features, dtype=np.float64))
    if x.shape[0] == 0:
        raise EncoderError("encode needs at least one view (V >= 1)")
    config = params.config
    if x.shape[1] != config.input_dim:
        raise EncoderError(f"Features have F={x.shape[1]}, encoder expects {config.input_dim}")

    p = params.float64()
    h_pre = layers.linear_forward(x, p['trunk.weight'], p['trunk.bias'])
    h = np.maximum(h_pre, 0.0)

    outputs, head_caches = {}, {}
    for space in SPACES:
        outputs[space], head_caches[space] = _head_forward(p, space, h, config, train_mode, rng)

    embedding = DualEmbedding(
        obj_per_view=outputs['obj'], obj_aggregate=outputs['obj'].mean(axis=0),
        cat_per_view=outputs['cat'], cat_aggregate=outputs['cat'].mean(axis=0),
    )
    return embedding, (x, h_pre, h, head_caches, p)


def encode(params, features, train_mode=False, rng=None):
    embedding, _ = forward(params, features, train_mode, rng)
    return embedding


def encode_single(params, feature):
    """(obj, cat) single-image embeddings: the full heads run on a one-view set in eval mode."""
    embedding = encode(params, np.asarray(feature)[None, :], train_mode=False)
    return embedding.obj_per_view[0], embedding.cat_per_view[0]


def _head_backward(p, space, dz, caches, grads):
    for layer in reversed(range(len(caches))):
        pre = f'{space}.layer{layer}'
        att_out, att_cache, ln1_cache, y, ff_pre, ln2_cache = caches[layer]

        dr2, dgain, dbias = layers.layer_norm_backward(dz, ln2_cache)
        grads[f'{pre}.ln2.gain'] += dgain
        grads[f'{pre}.ln2.bias'] += dbias
        dff_pre = dr2 * (ff_pre > 0.0)
        dy_ff, dw, db = layers.linear_backward(dff_pre, y, p[f'{pre}.ff.weight'])
        grads[f'{pre}.ff.weight'] += dw
        grads[f'{pre}.ff.bias'] += db
        dy = dr2 + dy_ff

        dr1, dgain, dbias = layers.layer_norm_backward(dy, ln1_cache)
        grads[f'{pre}.ln1.gain'] += dgain
        grads[f'{pre}.ln1.bias'] += dbias
        grads[f'{pre}.wo'] += att_out.T @ dr1
        dz_att, dwq, dwk, dwv = layers.self_attention_backward(dr1 @ p[f'{pre}.wo'].T, att_cache)
        grads[f'{pre}.wq'] += dwq
        grads[f'{pre}.wk'] += dwk
        grads[f'{pre}.wv'] += dwv
        dz = dr1 + dz_att
    return dz


def backward_one(cache, grad_embedding, grads):
    """Accumulates d(loss)/d(params) for one forward pass into `grads` (float64 dict)."""
    x, h_pre, h, head_caches, p = cache
    dh = np.zeros_like(h)
    for space in SPACES:
        per_view = grad_embedding.per_view(space)
        dz = per_view + grad_embedding.aggregate(space)[None, :] / per_view.shape[0]
        dz0 = _head_backward(p, space, dz, head_caches[space], grads)
        dh_space, dw, db = layers.linear_backward(dz0, h, p[f'{space}.input.weight'])
        grads[f'{space}.input.weight'] += dw
        grads[f'{space}.input.bias'] += db
        dh += dh_space
    dh_pre = dh * (h_pre > 0.0)
    _, dw, db = layers.linear_backward(dh_pre, x, p['trunk.weight'])
    grads['trunk.weight'] += dw
    grads['trunk.bias'] += db
    return grads


def backward(params, batch, loss_fn, train_mode=False, rng=None):
    """Gradient of a scalar loss over a batch of objects w.r.t. every parameter.

    batch   : {object_id: V x F features}
    loss_fn : callable({object_id: DualEmbedding}) -> (value, {object_id: DualEmbedding of gradients})

    Objects are encoded and back-propagated in ascending id order, so the
    reduction order (and the dropout RNG stream) is fixed.
    Returns (loss value, {param name: float64 gradient}, {object_id: DualEmbedding}).
    """
    embeddings, caches = {}, {}
    for object_id in sorted(batch):
        embeddings[object_id], caches[object_id] = forward(params, batch[object_id], train_mode, rng)
    bad = [o for o, e in embeddings.items() if not e.is_finite()]
    if bad:
        # hinge comparisons are False on NaN, so the loss alone would read 0
        raise NonFiniteLossError(f"Non-finite embeddings for objects {bad[:8]}",
                                 payload={'objects': sorted(batch), 'non_finite_objects': bad})

    value, emb_grads = loss_fn(embeddings)
    if not np.isfinite(value):
        raise NonFiniteLossError(f"Non-finite loss {value}",
                                 payload={'objects': sorted(batch), 'loss': float(value)})

    grads = params.zeros_like()
    for object_id in sorted(batch):
        if object_id in emb_grads:
            backward_one(caches[object_id], emb_grads[object_id], grads)
    return float(value), grads, embeddings


def encode_images(params, features):
    """Single-image (obj, cat) embeddings for every row of an N x F matrix, as two N x D arrays."""
    features = np.atleast_2d(np.asarray(features))
    dim = params.config.embed_dim
    obj = np.empty((features.shape[0], dim))
    cat = np.empty((features.shape[0], dim))
    for i, row in enumerate(features):
        obj[i], cat[i] = encode_single(params, row)
    return obj, cat
