# src/losses/joint.py
"""
Joint objectives over a batch of object pairs.

    cat  (same-category pairs, S1/S2): L_cat^x + L_cat^y + L_picat^{x,y} + L_piobj^{x,y}
    part (same-partition pairs, S3)  : L_cat^x + L_cat^y + L_piobj^{x,y}

The batch value is the mean over pairs (reduction='mean') or the sum.
L_cat negatives are the category aggregates of the distinct objects in the
batch (a batch-local variant; no learned category proxies).
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from src.encoder.dual_encoder import DualEmbedding
from src.losses.margin_losses import loss_cat, loss_picat, loss_piobj
from src.utils.errors import ObjectiveMismatchError

logger = logging.getLogger(__name__)

OBJECTIVE_CAT = 'cat'
OBJECTIVE_PART = 'part'
OBJECTIVES = (OBJECTIVE_CAT, OBJECTIVE_PART)


@dataclass
class LossBreakdown:
    l_piobj: float = 0.0
    l_picat: float = 0.0
    l_cat: float = 0.0
    l_joint: float = 0.0

    @property
    def informative(self):
        return self.l_piobj > 0.0


@dataclass
class BatchLoss:
    objective: str
    per_pair: list
    mean: LossBreakdown
    value: float
    grads: dict = field(default_factory=dict)

    @property
    def n_informative(self):
        return sum(1 for b in self.per_pair if b.informative)

    @property
    def tau_info(self):
        return self.n_informative / len(self.per_pair)


def _check_binding(objective, strategy):
    if strategy is None:
        return
    expected = getattr(strategy, 'objective', None)
    if expected is not None and expected != objective:
        raise ObjectiveMismatchError(
            f"{getattr(strategy, 'value', strategy)} batches are consumed by the '{expected}' objective, "
            f"not '{objective}'")


def _accumulate(grads, object_id, grad, scale):
    target = grads.get(object_id)
    if target is None:
        return
    target.obj_per_view += scale * grad.obj_per_view
    target.obj_aggregate += scale * grad.obj_aggregate
    target.cat_per_view += scale * grad.cat_per_view
    target.cat_aggregate += scale * grad.cat_aggregate


def joint_loss(embeddings, pairs, categories, margins, objective, with_grad=False, reduction='mean',
               strategy=None):
    """Evaluates the joint objective on {object_id: DualEmbedding} for `pairs`."""
    if objective not in OBJECTIVES:
        raise ValueError(f"Unknown objective '{objective}', expected one of {OBJECTIVES}")
    if reduction not in ('mean', 'sum'):
        raise ValueError(f"Unknown reduction '{reduction}'")
    if not pairs:
        raise ValueError("joint loss needs at least one pair")
    _check_binding(objective, strategy)
    if objective == OBJECTIVE_CAT:
        for x, y in pairs:
            if categories[x] != categories[y]:
                raise ObjectiveMismatchError(
                    f"Pair ({x}, {y}) spans categories {categories[x]} and {categories[y]}; "
                    f"the same-category objective needs both objects in one category")

    objects = sorted(embeddings)
    negatives = [(categories[o], embeddings[o].cat_aggregate) for o in objects]
    cat_terms = {}
    for o in {o for pair in pairs for o in pair}:
        cat_terms[o] = loss_cat(embeddings[o], categories[o], negatives, margins.gamma, with_grad=True)

    scale = 1.0 / len(pairs) if reduction == 'mean' else 1.0
    grads = {}
    if with_grad:
        grads = {o: DualEmbedding.zeros(*embeddings[o].obj_per_view.shape) for o in objects}

    per_pair = []
    for x, y in pairs:
        obj_value, gx, gy = loss_piobj(embeddings[x], embeddings[y], margins.alpha, margins.beta, with_grad=True)
        cat_value = cat_terms[x][0] + cat_terms[y][0]
        picat_value = 0.0
        if objective == OBJECTIVE_CAT:
            picat_value, gcx, gcy = loss_picat(embeddings[x], embeddings[y], margins.theta, with_grad=True)
        per_pair.append(LossBreakdown(l_piobj=obj_value, l_picat=picat_value, l_cat=cat_value,
                                      l_joint=cat_value + picat_value + obj_value))
        if not with_grad:
            continue
        _accumulate(grads, x, gx, scale)
        _accumulate(grads, y, gy, scale)
        if objective == OBJECTIVE_CAT:
            _accumulate(grads, x, gcx, scale)
            _accumulate(grads, y, gcy, scale)
        for o in (x, y):
            _, g_self, neg_index, g_neg = cat_terms[o]
            grads[o].cat_aggregate += scale * g_self
            if neg_index is not None:
                grads[objects[neg_index]].cat_aggregate += scale * g_neg

    n = len(per_pair)
    mean = LossBreakdown(
        l_piobj=sum(b.l_piobj for b in per_pair) / n,
        l_picat=sum(b.l_picat for b in per_pair) / n,
        l_cat=sum(b.l_cat for b in per_pair) / n,
        l_joint=sum(b.l_joint for b in per_pair) / n,
    )
    value = mean.l_joint if reduction == 'mean' else sum(b.l_joint for b in per_pair)
    return BatchLoss(objective=objective, per_pair=per_pair, mean=mean, value=value, grads=grads)


def loss_joint_cat(embeddings, pairs, categories, margins, **kwargs):
    """Same-category objective (S1/S2 batches)."""
    return joint_loss(embeddings, pairs, categories, margins, OBJECTIVE_CAT, **kwargs)


def loss_joint_part(embeddings, pairs, categories, margins, **kwargs):
    """Same-partition objective (S3 batches); cross-category pairs are legal."""
    return joint_loss(embeddings, pairs, categories, margins, OBJECTIVE_PART, **kwargs)


class JointObjective:
    """Callable loss for encoder.backward; keeps the last BatchLoss for metrics."""

    def __init__(self, pairs, categories, margins, objective, reduction='mean', strategy=None):
        self.pairs = list(pairs)
        self.categories = categories
        self.margins = margins
        self.objective = objective
        self.reduction = reduction
        self.strategy = strategy
        self.last = None

    def __call__(self, embeddings):
        self.last = joint_loss(embeddings, self.pairs, self.categories, self.margins, self.objective,
                               with_grad=True, reduction=self.reduction, strategy=self.strategy)
        if not np.isfinite(self.last.value):
            logger.error(f"Non-finite joint loss on pairs {self.pairs[:4]}...")
        return self.last.value, self.last.grads
