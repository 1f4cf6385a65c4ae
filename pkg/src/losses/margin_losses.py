# src/losses/margin_losses.py
"""
Margin (hinge) losses on dual embeddings. Distances are unsquared L2.

Hinges use max(0, .) with a strict test, so the derivative at a kink is 0.
With with_grad=True each loss also returns DualEmbedding-shaped gradients
w.r.t. the embeddings it reads (per-view rows and aggregates as independent
inputs; the encoder folds aggregate gradients back into the views).
"""

from dataclasses import dataclass

import numpy as np

from src.encoder.dual_encoder import DualEmbedding


@dataclass
class Margins:
    alpha: float = 0.25
    beta: float = 1.00
    theta: float = 0.25
    gamma: float = 4.00

    def validate(self):
        for name in ('alpha', 'beta', 'theta', 'gamma'):
            if getattr(self, name) <= 0:
                raise ValueError(f"margin {name} must be > 0, got {getattr(self, name)}")
        if self.beta <= self.alpha:
            raise ValueError(f"beta ({self.beta}) must exceed alpha ({self.alpha})")
        if self.gamma <= self.theta:
            raise ValueError(f"gamma ({self.gamma}) must exceed theta ({self.theta})")
        return self


def _pull(u, margin):
    """max(0, ||u|| - margin) and its gradient w.r.t. u."""
    d = float(np.linalg.norm(u))
    if d - margin > 0.0:
        return d - margin, u / d
    return 0.0, np.zeros_like(u)


def _push(u, margin):
    """max(0, margin - ||u||) and its gradient w.r.t. u (0 at u = 0)."""
    d = float(np.linalg.norm(u))
    if margin - d > 0.0:
        return margin - d, (-u / d if d > 0.0 else np.zeros_like(u))
    return 0.0, np.zeros_like(u)


def _zero_grad(emb):
    return DualEmbedding.zeros(emb.obj_per_view.shape[0], emb.obj_per_view.shape[1])


def confuser_index(views, other_aggregate):
    """Index of the view nearest to the other object's aggregate (lowest index on ties)."""
    return int(np.argmin(((views - other_aggregate) ** 2).sum(axis=1)))


def loss_piobj(emb_x, emb_y, alpha, beta, with_grad=False):
    """Object-space loss: pull each confuser towards its own aggregate, push it from the other's."""
    X, mx = emb_x.obj_per_view, emb_x.obj_aggregate
    Y, my = emb_y.obj_per_view, emb_y.obj_aggregate
    ix, iy = confuser_index(X, my), confuser_index(Y, mx)
    ax, ay = X[ix], Y[iy]

    pull_x, g_pull_x = _pull(ax - mx, alpha)
    pull_y, g_pull_y = _pull(ay - my, alpha)
    push_xy, g_push_xy = _push(ax - my, beta)
    push_yx, g_push_yx = _push(ay - mx, beta)
    push_m, g_push_m = _push(mx - my, beta)
    value = pull_x + pull_y + push_xy + push_yx + push_m
    if not with_grad:
        return value

    gx, gy = _zero_grad(emb_x), _zero_grad(emb_y)
    gx.obj_per_view[ix] += g_pull_x + g_push_xy
    gx.obj_aggregate[:] += -g_pull_x - g_push_yx + g_push_m
    gy.obj_per_view[iy] += g_pull_y + g_push_yx
    gy.obj_aggregate[:] += -g_pull_y - g_push_xy - g_push_m
    return value, gx, gy


def _views_to_aggregate(views, aggregate, theta, weight):
    """weight * sum_i max(0, ||v_i - m|| - theta), with gradients w.r.t. views and m."""
    u = views - aggregate
    d = np.linalg.norm(u, axis=1)
    active = d - theta > 0.0
    value = weight * float((d[active] - theta).sum())
    g_views = np.zeros_like(views)
    g_views[active] = weight * u[active] / d[active, None]
    return value, g_views, -g_views.sum(axis=0)


def loss_picat(emb_x, emb_y, theta, with_grad=False):
    """Category-space loss keeping a same-category pair (aggregates and views) within theta."""
    cx, mcx = emb_x.cat_per_view, emb_x.cat_aggregate
    cy, mcy = emb_y.cat_per_view, emb_y.cat_aggregate
    weight = 1.0 / (cx.shape[0] + cy.shape[0])

    agg_value, g_agg = _pull(mcx - mcy, theta)
    vx_value, g_cx, g_mcy = _views_to_aggregate(cx, mcy, theta, weight)
    vy_value, g_cy, g_mcx = _views_to_aggregate(cy, mcx, theta, weight)
    value = agg_value + vx_value + vy_value
    if not with_grad:
        return value

    gx, gy = _zero_grad(emb_x), _zero_grad(emb_y)
    gx.cat_per_view[:] += g_cx
    gx.cat_aggregate[:] += g_agg + g_mcx
    gy.cat_per_view[:] += g_cy
    gy.cat_aggregate[:] += -g_agg + g_mcy
    return value, gx, gy


def loss_cat(emb_x, category_x, negatives, gamma, with_grad=False):
    """max(0, gamma - distance to the nearest other-category aggregate in `negatives`).

    negatives: sequence of (category_id, aggregate vector). With with_grad the
    result is (value, grad w.r.t. x's category aggregate, index of the nearest
    negative or None, grad w.r.t. that negative).
    """
    mcx = emb_x.cat_aggregate
    candidates = [i for i, (c, _) in enumerate(negatives) if c != category_x]
    if not candidates:
        return (0.0, np.zeros_like(mcx), None, None) if with_grad else 0.0

    vectors = np.asarray([negatives[i][1] for i in candidates], dtype=np.float64)
    d = np.linalg.norm(mcx - vectors, axis=1)
    nearest = int(np.argmin(d))
    value, g_u = _push(mcx - vectors[nearest], gamma)
    if not with_grad:
        return value
    return value, g_u, candidates[nearest], -g_u
