"""Binary Gaussian process classification with the Laplace approximation.

Logistic likelihood, RBF kernel with fixed hyperparameters. The posterior
mode is found by Newton iterations in the numerically stable form that only
factorises ``I + W^1/2 K W^1/2``. Predictive probabilities use the probit
approximation to the logistic-Gaussian integral.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular

from ..errors import FitError


def rbf_kernel(A, B, length_scale: float = 1.0, variance: float = 1.0) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    d2 = (A**2).sum(1)[:, None] + (B**2).sum(1)[None, :] - 2 * A @ B.T
    return variance * np.exp(-0.5 * np.maximum(d2, 0.0) / length_scale**2)


def _sigmoid(z):
    return 0.5 * (1 + np.tanh(0.5 * z))


class GaussianProcessClassifier:
    def __init__(
        self,
        length_scale: float = 1.0,
        variance: float = 1.0,
        tol: float = 1e-8,
        max_iter: int = 100,
        max_train: int | None = 2000,
        seed: int = 0,
    ):
        self.length_scale = length_scale
        self.variance = variance
        self.tol = tol
        self.max_iter = max_iter
        self.max_train = max_train
        self.seed = seed
        self.n_iter = 0
        self.log_objective = None

    def fit(self, X, y) -> "GaussianProcessClassifier":
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=int)
        if self.max_train is not None and len(X) > self.max_train:
            # exact GP cost is cubic; keep a class-stratified random subset
            rng = np.random.default_rng(self.seed)
            keep = []
            for cls in np.unique(y):
                idx = np.flatnonzero(y == cls)
                share = int(round(self.max_train * len(idx) / len(y)))
                keep.append(rng.permutation(idx)[:share])
            keep = np.sort(np.concatenate(keep))
            X, y = X[keep], y[keep]

        target = (y > 0).astype(float)
        sign = 2 * target - 1
        K = rbf_kernel(X, X, self.length_scale, self.variance)
        n = len(X)
        f = np.zeros(n)
        a = np.zeros(n)
        obj = -np.inf
        for it in range(1, self.max_iter + 1):
            pi = _sigmoid(f)
            W = pi * (1 - pi)
            sw = np.sqrt(W)
            B = np.eye(n) + sw[:, None] * K * sw[None, :]
            try:
                L = cholesky(B, lower=True)
            except np.linalg.LinAlgError as exc:
                raise FitError(f"GPC Newton step failed: {exc}") from None
            b = W * f + (target - pi)
            a = b - sw * cho_solve((L, True), sw * (K @ b))
            f = K @ a
            new_obj = -0.5 * a @ f - np.sum(np.logaddexp(0.0, -sign * f))
            self.n_iter = it
            if abs(new_obj - obj) < self.tol:
                obj = new_obj
                break
            obj = new_obj

        pi = _sigmoid(f)
        W = pi * (1 - pi)
        sw = np.sqrt(W)
        B = np.eye(n) + sw[:, None] * K * sw[None, :]
        self._L = cholesky(B, lower=True)
        self._sw = sw
        self._resid = target - pi
        self._X = X
        self.log_objective = float(obj)
        return self

    def latent(self, X) -> tuple[np.ndarray, np.ndarray]:
        """Posterior mean and variance of the latent function at ``X``."""
        Ks = rbf_kernel(np.asarray(X, dtype=float), self._X, self.length_scale, self.variance)
        mean = Ks @ self._resid
        v = solve_triangular(self._L, (self._sw[:, None] * Ks.T), lower=True)
        var = np.maximum(self.variance - np.sum(v**2, axis=0), 0.0)
        return mean, var

    def predict_proba(self, X) -> np.ndarray:
        mean, var = self.latent(X)
        kappa = 1.0 / np.sqrt(1.0 + np.pi * var / 8.0)
        return _sigmoid(kappa * mean)

    def predict(self, X) -> np.ndarray:
        return (self.predict_proba(X) >= 0.5).astype(int)
