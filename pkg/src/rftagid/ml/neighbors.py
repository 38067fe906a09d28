from __future__ import annotations

import numpy as np


class KNeighbors:
    """Majority vote of the ``k`` nearest training points (Euclidean).

    Equal distances resolve toward the lower training index; a tied vote
    goes to class 0.
    """

    def __init__(self, k: int = 5, chunk: int = 512):
        self.k = k
        self.chunk = chunk
        self.X = None
        self.y = None

    def fit(self, X, y) -> "KNeighbors":
        self.X = np.asarray(X, dtype=float)
        self.y = np.asarray(y, dtype=int)
        return self

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        k = min(self.k, len(self.X))
        out = np.empty(len(X), dtype=int)
        for start in range(0, len(X), self.chunk):
            q = X[start : start + self.chunk]
            d2 = ((q[:, None, :] - self.X[None, :, :]) ** 2).sum(axis=2)
            nn = np.argsort(d2, axis=1, kind="stable")[:, :k]
            ones = self.y[nn].sum(axis=1)
            out[start : start + len(q)] = (2 * ones > k).astype(int)
        return out
