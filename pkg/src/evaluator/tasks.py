# src/evaluator/tasks.py
"""
The eight evaluation tasks: {single-, multi-image} x {category, object} x
{recognition accuracy, retrieval mAP}. Scores are percentages.

Recognition: queries from the test split, classified against the train
per-image gallery in the matching space. Retrieval: test queries ranked
against the test per-image gallery; single-image queries exclude themselves,
multi-image queries are the per-object test aggregates.
"""

import csv
import io
import logging
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from src.annindex.distance import squared_distances
from src.evaluator.gallery import build_gallery
from src.utils.errors import EvaluationError

logger = logging.getLogger(__name__)

TASK_NAMES = ['sv_cat_acc', 'sv_obj_acc', 'mv_cat_acc', 'mv_obj_acc',
              'sv_cat_map', 'sv_obj_map', 'mv_cat_map', 'mv_obj_map']
CLASSIFIERS = ('nn', 'centroid')


def _check_gallery(gallery_emb, gallery_labels):
    gallery_emb = np.atleast_2d(np.asarray(gallery_emb, dtype=np.float64))
    gallery_labels = np.asarray(gallery_labels, dtype=np.int64)
    if gallery_labels.size == 0:
        raise EvaluationError("Cannot classify against an empty gallery")
    return gallery_emb, gallery_labels


def _centroids(gallery_emb, gallery_labels):
    labels = np.unique(gallery_labels)
    centroids = np.stack([gallery_emb[gallery_labels == label].mean(axis=0) for label in labels])
    return centroids, labels


def classify_many(queries, gallery_emb, gallery_labels, mode='nn'):
    """Predicted label per query row; exact distance ties go to the lowest label."""
    if mode not in CLASSIFIERS:
        raise ValueError(f"Unknown classifier '{mode}', expected one of {CLASSIFIERS}")
    gallery_emb, gallery_labels = _check_gallery(gallery_emb, gallery_labels)
    if mode == 'centroid':
        gallery_emb, gallery_labels = _centroids(gallery_emb, gallery_labels)
    queries = np.atleast_2d(np.asarray(queries, dtype=np.float64))
    d = squared_distances(queries, gallery_emb)
    nearest = d == d.min(axis=1, keepdims=True)
    masked = np.where(nearest, gallery_labels[None, :], np.iinfo(np.int64).max)
    return masked.min(axis=1)


def classify(query, gallery_emb, gallery_labels, mode='nn'):
    return int(classify_many(np.asarray(query)[None, :], gallery_emb, gallery_labels, mode)[0])


def average_precision(relevant_in_rank_order):
    """Mean of precision@hit over the relevant positions of a ranked list (0..1)."""
    hits = np.asarray(relevant_in_rank_order, dtype=bool)
    if not hits.any():
        return None
    ranks = np.flatnonzero(hits) + 1
    return float(np.mean(np.arange(1, len(ranks) + 1) / ranks))


class RetrievalScore(NamedTuple):
    mean_ap: float
    n_scored: int
    n_skipped: int


def retrieval_map(query_emb, query_labels, gallery_emb, gallery_labels, exclude_self=False):
    """mAP (0..100) of ranking the gallery by L2 distance for every query.

    exclude_self: query i is gallery item i and is dropped from its own list.
    Queries with no relevant gallery item are skipped and counted.
    """
    query_emb = np.atleast_2d(np.asarray(query_emb, dtype=np.float64))
    query_labels = np.asarray(query_labels, dtype=np.int64)
    gallery_emb, gallery_labels = _check_gallery(gallery_emb, gallery_labels)
    d = squared_distances(query_emb, gallery_emb)

    scores, skipped = [], 0
    for i in range(len(query_labels)):
        order = np.argsort(d[i], kind='stable')
        if exclude_self:
            order = order[order != i]
        ap = average_precision(gallery_labels[order] == query_labels[i])
        if ap is None:
            skipped += 1
            continue
        scores.append(ap)
    if not scores:
        raise EvaluationError(f"All {len(query_labels)} retrieval queries have no relevant gallery item")
    if skipped:
        logger.warning(f"Retrieval skipped {skipped} of {len(query_labels)} queries with no relevant items")
    return RetrievalScore(100.0 * float(np.mean(scores)), len(scores), skipped)


@dataclass
class TaskReport:
    sv_cat_acc: float
    sv_obj_acc: float
    mv_cat_acc: float
    mv_obj_acc: float
    sv_cat_map: float
    sv_obj_map: float
    mv_cat_map: float
    mv_obj_map: float
    skipped: dict = field(default_factory=dict)
    classifier: str = 'nn'

    @property
    def scores(self):
        return {name: getattr(self, name) for name in TASK_NAMES}

    @property
    def avg_acc(self):
        return (self.sv_cat_acc + self.sv_obj_acc + self.mv_cat_acc + self.mv_obj_acc) / 4.0

    @property
    def avg_map(self):
        return (self.sv_cat_map + self.sv_obj_map + self.mv_cat_map + self.mv_obj_map) / 4.0

    def to_table(self):
        lines = [f"{'':<8}{'SV cat':>10}{'SV obj':>10}{'MV cat':>10}{'MV obj':>10}{'Avg.':>10}"]
        lines.append(f"{'acc':<8}{self.sv_cat_acc:>10.2f}{self.sv_obj_acc:>10.2f}"
                     f"{self.mv_cat_acc:>10.2f}{self.mv_obj_acc:>10.2f}{self.avg_acc:>10.2f}")
        lines.append(f"{'mAP':<8}{self.sv_cat_map:>10.2f}{self.sv_obj_map:>10.2f}"
                     f"{self.mv_cat_map:>10.2f}{self.mv_obj_map:>10.2f}{self.avg_map:>10.2f}")
        skipped = {k: v for k, v in self.skipped.items() if v}
        if skipped:
            lines.append('skipped queries: ' + ', '.join(f"{k}={v}" for k, v in sorted(skipped.items())))
        return '\n'.join(lines)

    @staticmethod
    def csv_header():
        return (['run_id'] + TASK_NAMES + ['avg_acc', 'avg_map']
                + [f'{name}_skipped' for name in TASK_NAMES if name.endswith('_map')])

    def csv_row(self, run_id):
        values = [getattr(self, name) for name in TASK_NAMES] + [self.avg_acc, self.avg_map]
        skipped = [self.skipped.get(name, 0) for name in TASK_NAMES if name.endswith('_map')]
        return [str(run_id)] + [format(v, '.6f') for v in values] + [str(s) for s in skipped]

    def to_csv(self, run_id):
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator='\n')
        writer.writerow(self.csv_header())
        writer.writerow(self.csv_row(run_id))
        return buffer.getvalue()


def _accuracy(predicted, truth):
    return 100.0 * float(np.mean(np.asarray(predicted) == np.asarray(truth)))


def run_tasks_from_galleries(train, test, classifier='nn'):
    """All eight scores from prebuilt train (recognition gallery) and test galleries."""
    acc, retrieval = {}, {}
    for space in ('cat', 'obj'):
        gallery, gallery_labels = train.per_image(space)
        images, image_labels = test.per_image(space)
        aggregates, aggregate_labels = test.aggregates(space)
        acc[f'sv_{space}_acc'] = _accuracy(classify_many(images, gallery, gallery_labels, classifier), image_labels)
        acc[f'mv_{space}_acc'] = _accuracy(classify_many(aggregates, gallery, gallery_labels, classifier),
                                            aggregate_labels)
        retrieval[f'sv_{space}_map'] = retrieval_map(images, image_labels, images, image_labels, exclude_self=True)
        retrieval[f'mv_{space}_map'] = retrieval_map(aggregates, aggregate_labels, images, image_labels)
    report = TaskReport(**acc, **{k: v.mean_ap for k, v in retrieval.items()},
                        skipped={k: v.n_skipped for k, v in retrieval.items()}, classifier=classifier)
    logger.info(f"Evaluation: avg acc {report.avg_acc:.2f}, avg mAP {report.avg_map:.2f}")
    return report


def run_eight_tasks(params, dataset, classifier='nn'):
    train = build_gallery(params, dataset, 'train')
    test = build_gallery(params, dataset, 'test')
    return run_tasks_from_galleries(train, test, classifier)
