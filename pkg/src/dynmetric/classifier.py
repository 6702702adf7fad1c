"""k-NN classification under a learned metric and the cross-validation harness."""

from __future__ import annotations

import json
import time
from collections import defaultdict
from dataclasses import asdict, dataclass, field

import numpy as np

from .dataset import Dataset, standardize, stratified_kfold
from .errors import DimensionMismatch, EmptyTrainingSet, InputError
from .metric import MahalanobisMetric, pairwise_distances
from .solver import SolverConfig, train

BASELINE_NAME = "Euclidean distance"
LEARNED_NAME = "Ours"


def _vote(labels, dists):
    """Majority label; ties by smallest summed distance, then label order."""
    count = defaultdict(int)
    total = defaultdict(float)
    for lab, dist in zip(labels, dists):
        count[lab] += 1
        total[lab] += dist
    return min(count, key=lambda lab: (-count[lab], total[lab], lab))


def _check(train: Dataset, M, k):
    if train.n == 0:
        raise EmptyTrainingSet("training set is empty")
    if M.dim != train.dim:
        raise DimensionMismatch(f"metric dim {M.dim} != training data dim {train.dim}")
    if not 1 <= k <= train.n:
        raise InputError(f"k={k} must lie in [1, {train.n}]")


def _predict_rows(train: Dataset, D, ks):
    # stable sort: equal distances keep index order
    order = np.argsort(D, axis=1, kind="stable")
    out = {}
    for k in ks:
        nn = order[:, :k]
        out[k] = [_vote(train.labels[row], D[q, row]) for q, row in enumerate(nn)]
    return out


def knn_predict(train: Dataset, M: MahalanobisMetric, query, k: int = 1) -> str:
    """Label of ``query`` by a ``k``-nearest-neighbor vote under ``M``."""
    _check(train, M, k)
    q = np.asarray(query, dtype=float)
    if q.shape != (train.dim,):
        raise DimensionMismatch(f"query of shape {q.shape}, expected ({train.dim},)")
    D = pairwise_distances(q[None, :], M, train.X)
    return _predict_rows(train, D, [k])[k][0]


def predict_many(train: Dataset, M: MahalanobisMetric, queries, k: int = 1) -> list:
    _check(train, M, k)
    Q = np.atleast_2d(np.asarray(queries, dtype=float))
    if Q.shape[1] != train.dim:
        raise DimensionMismatch(f"queries have {Q.shape[1]} features, expected {train.dim}")
    return _predict_rows(train, pairwise_distances(Q, M, train.X), [k])[k]


def evaluate(train: Dataset, test: Dataset, M: MahalanobisMetric, ks) -> dict:
    """Percent accuracy on ``test`` for each ``k`` in ``ks``."""
    ks = list(ks)
    if not ks:
        raise InputError("ks must not be empty")
    for k in ks:
        _check(train, M, k)
    if test.dim != train.dim:
        raise DimensionMismatch(f"test dim {test.dim} != train dim {train.dim}")
    preds = _predict_rows(train, pairwise_distances(test.X, M, train.X), ks)
    return {k: 100.0 * float(np.mean(np.asarray(preds[k], dtype=object) == test.labels)) for k in ks}


@dataclass
class EvaluationReport:
    """Per-fold accuracies (percent) for the learned metric and the Euclidean baseline.

    ``learned[k]`` and ``baseline[k]`` are lists with one entry per fold.
    Timing lives only in ``train_time_ms`` so the accuracy output is
    reproducible byte for byte.
    """

    ks: list
    folds: int
    learned: dict
    baseline: dict
    train_time_ms: list = field(default_factory=list)
    config: dict = field(default_factory=dict)

    def mean(self, k, which="learned"):
        return float(np.mean(getattr(self, which)[k]))

    def table(self) -> str:
        width = max(len(BASELINE_NAME), len(LEARNED_NAME))
        head = " " * width + "".join(f"  {'k=' + str(k):>6}" for k in self.ks)
        rows = [head]
        for name, which in ((BASELINE_NAME, "baseline"), (LEARNED_NAME, "learned")):
            rows.append(f"{name:<{width}}" + "".join(f"  {self.mean(k, which):6.2f}" for k in self.ks))
        return "\n".join(rows) + "\n"

    def to_dict(self):
        return {
            "ks": list(self.ks),
            "folds": self.folds,
            "learned": {str(k): v for k, v in self.learned.items()},
            "baseline": {str(k): v for k, v in self.baseline.items()},
            "mean_learned": {str(k): round(self.mean(k), 2) for k in self.ks},
            "mean_baseline": {str(k): round(self.mean(k, "baseline"), 2) for k in self.ks},
            "config": self.config,
            "timing": {"train_time_ms": self.train_time_ms},
        }

    def to_json(self, timing=True):
        d = self.to_dict()
        if not timing:
            d.pop("timing")
        return json.dumps(d, indent=1)


def cross_validate(
    ds: Dataset,
    cfg: SolverConfig = SolverConfig(),
    ks=(1, 2, 3, 4, 5),
    folds: int = 3,
    seed: int = 0,
    standardize_folds: bool = False,
) -> EvaluationReport:
    """Stratified k-fold evaluation of the learned metric against Euclidean.

    The metric (and, with ``standardize_folds``, the scaling) is fitted on the
    training split of each fold only.
    """
    ks = list(ks)
    learned = {k: [] for k in ks}
    baseline = {k: [] for k in ks}
    times = []
    for train_idx, test_idx in stratified_kfold(ds, folds, seed):
        tr, te = ds.subset(train_idx), ds.subset(test_idx)
        if standardize_folds:
            tr, scaling = standardize(tr)
            te = scaling.apply(te)
        t0 = time.perf_counter()
        M, _ = train(tr, cfg)
        times.append((time.perf_counter() - t0) * 1e3)
        for k, acc in evaluate(tr, te, M, ks).items():
            learned[k].append(acc)
        for k, acc in evaluate(tr, te, MahalanobisMetric.identity(ds.dim), ks).items():
            baseline[k].append(acc)
    config = {**asdict(cfg), "folds": folds, "split_seed": seed, "standardize": standardize_folds}
    return EvaluationReport(ks, folds, learned, baseline, times, config)
