"""Classifier suite, training/evaluation helpers and the end-to-end study."""

from .core import (
    ALGORITHMS,
    LAMBDA_GRID,
    Metrics,
    TrainedClassifier,
    canonical_algorithm,
    confusion_metrics,
    evaluate,
    lambda_search,
    predict,
    stratified_folds,
    train,
)
from .linear import svm_objective
from .study import REGIMES, Report, StudyConfig, run_study

__all__ = [
    "ALGORITHMS",
    "LAMBDA_GRID",
    "Metrics",
    "REGIMES",
    "Report",
    "StudyConfig",
    "TrainedClassifier",
    "canonical_algorithm",
    "confusion_metrics",
    "evaluate",
    "lambda_search",
    "predict",
    "run_study",
    "stratified_folds",
    "svm_objective",
    "train",
]
