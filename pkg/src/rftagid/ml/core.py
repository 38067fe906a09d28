"""Uniform train / predict / evaluate interface over the classifier suite."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..dataset import Dataset
from ..errors import FitError, ValidationError
from ..features import Standardizer
from .gp import GaussianProcessClassifier
from .linear import LinearSVM, LogisticRegression, Perceptron
from .neighbors import KNeighbors
from .tree import DecisionTree, RandomForest

ALGORITHMS = ("perceptron", "logistic", "svm_linear", "knn", "gpc", "decision_tree", "random_forest")
ALIASES = {
    "svm": "svm_linear",
    "lr": "logistic",
    "logistic_regression": "logistic",
    "tree": "decision_tree",
    "dt": "decision_tree",
    "rf": "random_forest",
    "forest": "random_forest",
}
LAMBDA_GRID = tuple(10.0**p for p in range(-3, 3))


def canonical_algorithm(name: str) -> str:
    name = name.strip().lower()
    name = ALIASES.get(name, name)
    if name not in ALGORITHMS:
        raise ValidationError(f"unknown classifier {name!r}; choose from {', '.join(ALGORITHMS)}")
    return name


def _build(algorithm: str, hyper: dict, seed: int):
    h = dict(hyper)
    if algorithm == "perceptron":
        return Perceptron(lr=h.get("lr", 1.0), max_epochs=h.get("max_epochs", 1000), seed=seed)
    if algorithm == "logistic":
        return LogisticRegression(lr=h.get("lr", 0.1), max_iter=h.get("max_iter", 5000), tol=h.get("tol", 1e-8))
    if algorithm == "svm_linear":
        return LinearSVM(lam=h["lambda"], max_iter=h.get("max_iter", 1000), fixed_b=h.get("fixed_b"))
    if algorithm == "knn":
        return KNeighbors(k=h.get("k", 5))
    if algorithm == "gpc":
        return GaussianProcessClassifier(
            length_scale=h.get("length_scale", 1.0),
            variance=h.get("variance", 1.0),
            tol=h.get("tol", 1e-8),
            max_iter=h.get("max_iter", 100),
            max_train=h.get("max_train", 2000),
            seed=seed,
        )
    if algorithm == "decision_tree":
        return DecisionTree(max_depth=h.get("max_depth"), min_leaf=h.get("min_leaf", 1), seed=seed)
    if algorithm == "random_forest":
        return RandomForest(
            n_trees=h.get("n_trees", 100),
            max_features=h.get("max_features"),
            bootstrap=h.get("bootstrap", True),
            max_depth=h.get("max_depth"),
            seed=seed,
        )
    raise ValidationError(f"unknown classifier {algorithm!r}")


@dataclass
class TrainedClassifier:
    algorithm: str
    estimator: Any
    standardizer: Standardizer | None
    training_meta: dict = field(default_factory=dict)

    def predict(self, X) -> np.ndarray:
        """Labels for rows already standardized with ``self.standardizer``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        expected = self.training_meta.get("n_features")
        if expected is not None and X.shape[1] != expected:
            raise ValidationError(f"expected {expected} features, got {X.shape[1]}")
        return self.estimator.predict(X).astype(int)

    def predict_raw(self, X) -> np.ndarray:
        """Standardize raw features first, then predict."""
        if self.standardizer is None:
            return self.predict(X)
        return self.predict(self.standardizer.transform(X))


def _check_training(X, y):
    if len(X) == 0:
        raise FitError("cannot train on an empty dataset")
    labels = np.unique(y)
    if not set(labels.tolist()) <= {0, 1}:
        raise FitError(f"labels must be binary 0/1, got {labels.tolist()}")


def train(
    algorithm: str,
    data: Dataset,
    hyper: dict | None = None,
    seed: int = 0,
    standardizer: Standardizer | None = None,
) -> TrainedClassifier:
    """Fit one classifier on ``data.labels``.

    For the SVM, ``lambda`` is chosen by :func:`lambda_search` unless given
    in ``hyper``.
    """
    algorithm = canonical_algorithm(algorithm)
    hyper = dict(hyper or {})
    X, y = data.features, data.labels
    _check_training(X, y)
    meta = {"n_samples": int(len(X)), "n_features": int(X.shape[1]), "seed": seed}
    if algorithm == "svm_linear" and hyper.get("lambda") is None:
        lam, model = lambda_search(
            data, hyper.get("folds", 5), hyper.get("grid", LAMBDA_GRID), seed,
            max_iter=hyper.get("max_iter", 1000), fixed_b=hyper.get("fixed_b"),
        )
        hyper["lambda"] = lam
        meta["hyperparameters"] = hyper
        return TrainedClassifier(algorithm, model, standardizer, meta)
    est = _build(algorithm, hyper, seed).fit(X, y)
    meta["hyperparameters"] = hyper
    return TrainedClassifier(algorithm, est, standardizer, meta)


def predict(model: TrainedClassifier, x) -> np.ndarray | int:
    """Predict one feature vector (returns an int) or a matrix of rows."""
    arr = np.asarray(getattr(x, "peak_mags_db", x), dtype=float)
    out = model.predict(np.atleast_2d(arr))
    return int(out[0]) if arr.ndim == 1 else out


def stratified_folds(y, folds: int, seed: int) -> list[np.ndarray]:
    """Seeded stratified assignment of row indices to ``folds`` folds."""
    y = np.asarray(y)
    rng = np.random.default_rng(seed)
    assign = [[] for _ in range(folds)]
    for cls in np.unique(y):
        idx = rng.permutation(np.flatnonzero(y == cls))
        if len(idx) < folds:
            raise ValidationError(f"class {cls} has {len(idx)} rows, fewer than {folds} folds")
        for j, chunk in enumerate(np.array_split(idx, folds)):
            assign[j].extend(chunk.tolist())
    return [np.sort(np.array(a, dtype=int)) for a in assign]


def lambda_search(
    data: Dataset,
    folds: int = 5,
    grid=LAMBDA_GRID,
    seed: int = 0,
    max_iter: int = 1000,
    fixed_b: float | None = None,
):
    """Pick the SVM regularisation weight with the best cross-validated accuracy.

    Ties go to the smaller weight. Returns ``(lambda, model)`` with the model
    refitted on all of ``data``.
    """
    X, y = data.features, data.labels
    _check_training(X, y)
    if folds < 2:
        raise ValidationError("lambda_search needs at least 2 folds")
    parts = stratified_folds(y, folds, seed)
    best_lam, best_acc = None, -1.0
    for lam in sorted(grid):
        accs = []
        for j in range(folds):
            test = parts[j]
            train_idx = np.concatenate([parts[i] for i in range(folds) if i != j])
            m = LinearSVM(lam, max_iter, fixed_b).fit(X[train_idx], y[train_idx])
            accs.append(np.mean(m.predict(X[test]) == y[test]))
        acc = float(np.mean(accs))
        if acc > best_acc:
            best_lam, best_acc = lam, acc
    model = LinearSVM(best_lam, max_iter, fixed_b).fit(X, y)
    model.cv_accuracy = best_acc
    return best_lam, model


@dataclass
class Metrics:
    accuracy: float
    confusion: np.ndarray
    per_class_recall: tuple[float, float]

    def normalized(self) -> np.ndarray:
        """Confusion matrix with each true-class row summing to one."""
        rows = self.confusion.sum(axis=1, keepdims=True)
        return np.divide(self.confusion, rows, out=np.zeros(self.confusion.shape), where=rows > 0)


def confusion_metrics(y_true, y_pred) -> Metrics:
    y_true = np.asarray(y_true, dtype=int)
    y_pred = np.asarray(y_pred, dtype=int)
    cm = np.zeros((2, 2), dtype=int)
    np.add.at(cm, (y_true, y_pred), 1)
    total = cm.sum()
    acc = float(np.trace(cm) / total) if total else 0.0
    rec = tuple(float(cm[c, c] / cm[c].sum()) if cm[c].sum() else 0.0 for c in (0, 1))
    return Metrics(acc, cm, rec)


def evaluate(model: TrainedClassifier, test: Dataset) -> Metrics:
    """Score predictions on standardized ``test`` against ground-truth devices."""
    if len(test) == 0:
        raise ValidationError("empty test set")
    return confusion_metrics(test.truth, model.predict(test.features))
