"""Linear classifiers: perceptron, logistic regression, hinge-loss SVM.

All take ``{0, 1}`` labels at the API and use ``{-1, +1}`` internally.
"""

from __future__ import annotations

import numpy as np

from ..errors import FitError


def _pm1(y) -> np.ndarray:
    return np.where(np.asarray(y) > 0, 1.0, -1.0)


class Perceptron:
    """Rosenblatt perceptron with bias, trained online until an error-free epoch."""

    def __init__(self, lr: float = 1.0, max_epochs: int = 1000, seed: int = 0, chunk: int = 256):
        self.lr = lr
        self.max_epochs = max_epochs
        self.seed = seed
        self.chunk = chunk
        self.w = None
        self.b = 0.0
        self.n_updates = 0
        self.n_epochs = 0
        self.converged = False

    def fit(self, X, y) -> "Perceptron":
        X = np.asarray(X, dtype=float)
        t = _pm1(y)
        n, d = X.shape
        w, b = np.zeros(d), 0.0
        rng = np.random.default_rng(self.seed)
        self.n_updates = 0
        self.converged = False
        for epoch in range(1, self.max_epochs + 1):
            order = rng.permutation(n)
            Xo, to = X[order], t[order]
            mistakes = 0
            pos = 0
            # exact online pass: w only changes at a mistake, so the points up
            # to the next mistake can be scored in one vectorised step
            while pos < n:
                end = min(pos + self.chunk, n)
                margins = to[pos:end] * (Xo[pos:end] @ w + b)
                bad = np.flatnonzero(margins <= 0)
                if bad.size == 0:
                    pos = end
                    continue
                i = pos + int(bad[0])
                w = w + self.lr * to[i] * Xo[i]
                b += self.lr * to[i]
                mistakes += 1
                pos = i + 1
            self.n_updates += mistakes
            self.n_epochs = epoch
            if mistakes == 0:
                self.converged = True
                break
        self.w, self.b = w, b
        return self

    def decision_function(self, X) -> np.ndarray:
        return np.asarray(X, dtype=float) @ self.w + self.b

    def predict(self, X) -> np.ndarray:
        return (self.decision_function(X) > 0).astype(int)


def logistic_loss(params: np.ndarray, X, y, l2: float = 0.0) -> float:
    """Mean log-loss of ``sigmoid(w.x + b)``; ``params = [w..., b]``."""
    X = np.asarray(X, dtype=float)
    t = _pm1(y)
    z = X @ params[:-1] + params[-1]
    return float(np.mean(np.logaddexp(0.0, -t * z)) + l2 * params[:-1] @ params[:-1])


def logistic_grad(params: np.ndarray, X, y, l2: float = 0.0) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    t = _pm1(y)
    z = X @ params[:-1] + params[-1]
    # d/dz log(1 + e^{-tz}) = -t * sigmoid(-tz)
    s = -t * _sigmoid(-t * z)
    g = np.empty_like(params)
    g[:-1] = X.T @ s / len(X) + 2 * l2 * params[:-1]
    g[-1] = s.mean()
    return g


def _sigmoid(z):
    return np.where(z >= 0, 1 / (1 + np.exp(-np.abs(z))), np.exp(-np.abs(z)) / (1 + np.exp(-np.abs(z))))


class LogisticRegression:
    def __init__(self, lr: float = 0.1, max_iter: int = 5000, tol: float = 1e-8, l2: float = 0.0):
        self.lr = lr
        self.max_iter = max_iter
        self.tol = tol
        self.l2 = l2
        self.params = None
        self.loss_history: list[float] = []

    def fit(self, X, y) -> "LogisticRegression":
        X = np.asarray(X, dtype=float)
        p = np.zeros(X.shape[1] + 1)
        prev = logistic_loss(p, X, y, self.l2)
        self.loss_history = [prev]
        for _ in range(self.max_iter):
            p = p - self.lr * logistic_grad(p, X, y, self.l2)
            cur = logistic_loss(p, X, y, self.l2)
            self.loss_history.append(cur)
            if abs(prev - cur) < self.tol:
                break
            prev = cur
        self.params = p
        return self

    def predict_proba(self, X) -> np.ndarray:
        z = np.asarray(X, dtype=float) @ self.params[:-1] + self.params[-1]
        return _sigmoid(z)

    def predict(self, X) -> np.ndarray:
        return (self.predict_proba(X) > 0.5).astype(int)


def svm_objective(w, b: float, lam: float, X, y, literal: bool = False) -> float:
    """Mean hinge loss plus ``lam * ||w||^2`` for the decision ``w.x - b``.

    ``literal=True`` evaluates the label-free slack ``max(0, 1 - w.x - b)``
    instead of the usual ``max(0, 1 - y (w.x - b))``.
    """
    w = np.asarray(w, dtype=float)
    X = np.asarray(X, dtype=float)
    if literal:
        slack = np.maximum(0.0, 1.0 - X @ w - b)
    else:
        slack = np.maximum(0.0, 1.0 - _pm1(y) * (X @ w - b))
    return float(slack.mean() + lam * w @ w)


class LinearSVM:
    """Soft-margin linear SVM fitted by full-batch subgradient descent.

    Step size is ``eta0 / sqrt(t)`` with ``eta0 = min(1, 1 / (2 lam))``;
    the best iterate seen is kept. ``fixed_b`` freezes the offset.
    """

    def __init__(self, lam: float = 1e-2, max_iter: int = 1000, fixed_b: float | None = None):
        self.lam = lam
        self.max_iter = max_iter
        self.fixed_b = fixed_b
        self.w = None
        self.b = 0.0
        self.objective_history: list[float] = []

    def fit(self, X, y) -> "LinearSVM":
        X = np.asarray(X, dtype=float)
        t = _pm1(y)
        n, d = X.shape
        if n == 0:
            raise FitError("empty training set")
        w = np.zeros(d)
        b = 0.0 if self.fixed_b is None else float(self.fixed_b)
        eta0 = min(1.0, 1.0 / (2 * self.lam)) if self.lam > 0 else 1.0
        best = (svm_objective(w, b, self.lam, X, y), w.copy(), b)
        self.objective_history = [best[0]]
        for it in range(1, self.max_iter + 1):
            active = t * (X @ w - b) < 1
            gw = 2 * self.lam * w - (t[active] @ X[active]) / n
            gb = t[active].sum() / n
            eta = eta0 / np.sqrt(it)
            w = w - eta * gw
            if self.fixed_b is None:
                b = b - eta * gb
            obj = svm_objective(w, b, self.lam, X, y)
            if obj < best[0]:
                best = (obj, w.copy(), b)
            self.objective_history.append(best[0])
        _, self.w, self.b = best
        return self

    def decision_function(self, X) -> np.ndarray:
        return np.asarray(X, dtype=float) @ self.w - self.b

    def predict(self, X) -> np.ndarray:
        return (self.decision_function(X) > 0).astype(int)
