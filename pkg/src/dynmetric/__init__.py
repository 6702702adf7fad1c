"""Mahalanobis metric learning with dynamically regenerated pairwise constraints."""

from .classifier import EvaluationReport, cross_validate, evaluate, knn_predict
from .constraints import Pair, PairSet, Relation, build_pairset, nearest_neighbors
from .dataset import (
    Dataset,
    ScalingParams,
    generate_synthetic,
    load_csv,
    standardize,
    stratified_kfold,
    write_csv,
)
from .metric import (
    MahalanobisMetric,
    distance,
    is_psd,
    load_metric,
    logdet_divergence,
    rank_one_update,
    save_metric,
)
from .solver import SolverConfig, Thresholds, compute_thresholds, inner_solve, project_pair, train

__version__ = "0.1.0"
