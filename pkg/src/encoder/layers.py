# src/encoder/layers.py
"""
Forward/backward primitives for the attention heads (float64 numpy).

Every *_forward returns (output, cache); the matching *_backward takes the
upstream gradient and the cache and returns input and parameter gradients.
"""

import math

import numpy as np

LN_EPS = 1e-5


def linear_forward(x, weight, bias=None):
    y = x @ weight
    if bias is not None:
        y = y + bias
    return y


def linear_backward(dy, x, weight):
    """Returns (dx, dweight, dbias)."""
    return dy @ weight.T, x.T @ dy, dy.sum(axis=0)


def layer_norm_forward(x, gain, bias):
    mu = x.mean(axis=-1, keepdims=True)
    var = ((x - mu) ** 2).mean(axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + LN_EPS)
    xhat = (x - mu) * inv_std
    return gain * xhat + bias, (xhat, inv_std, gain)


def layer_norm_backward(dy, cache):
    xhat, inv_std, gain = cache
    dxhat = dy * gain
    dx = inv_std * (dxhat
                    - dxhat.mean(axis=-1, keepdims=True)
                    - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True))
    return dx, (dy * xhat).sum(axis=0), dy.sum(axis=0)


def _split_heads(x, n_heads):
    V, D = x.shape
    return x.reshape(V, n_heads, D // n_heads).transpose(1, 0, 2)


def _merge_heads(x):
    H, V, dh = x.shape
    return x.transpose(1, 0, 2).reshape(V, H * dh)


def softmax(scores):
    shifted = scores - scores.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def self_attention_forward(z, wq, wk, wv, n_heads, dropout_rate=0.0, train_mode=False, rng=None):
    """Multi-head scaled dot-product self-attention over the V rows of z (before the output projection).

    Dropout is applied to the attention weights only in train mode; the
    inverted-dropout mask is drawn from `rng` as one (n_heads, V, V) block.
    """
    V, D = z.shape
    scale = 1.0 / math.sqrt(D // n_heads)
    q = _split_heads(z @ wq, n_heads)
    k = _split_heads(z @ wk, n_heads)
    v = _split_heads(z @ wv, n_heads)
    attn = softmax(q @ k.transpose(0, 2, 1) * scale)

    mask = None
    if train_mode and dropout_rate > 0.0:
        if rng is None:
            raise ValueError("train-mode attention dropout needs an rng")
        mask = (rng.random(attn.shape) >= dropout_rate) / (1.0 - dropout_rate)
        weights = attn * mask
    else:
        weights = attn
    out = _merge_heads(weights @ v)
    return out, (z, q, k, v, attn, weights, mask, scale, wq, wk, wv, n_heads)


def self_attention_backward(dout, cache):
    """Returns (dz, dwq, dwk, dwv)."""
    z, q, k, v, attn, weights, mask, scale, wq, wk, wv, n_heads = cache
    dout_h = _split_heads(dout, n_heads)
    dweights = dout_h @ v.transpose(0, 2, 1)
    dv = weights.transpose(0, 2, 1) @ dout_h
    dattn = dweights * mask if mask is not None else dweights
    dscores = attn * (dattn - (dattn * attn).sum(axis=-1, keepdims=True)) * scale
    dq = dscores @ k
    dk = dscores.transpose(0, 2, 1) @ q

    dq, dk, dv = _merge_heads(dq), _merge_heads(dk), _merge_heads(dv)
    dz = dq @ wq.T + dk @ wk.T + dv @ wv.T
    return dz, z.T @ dq, z.T @ dk, z.T @ dv
