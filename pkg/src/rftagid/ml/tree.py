"""Gini decision trees and a bootstrap random forest."""

from __future__ import annotations

import numpy as np


def gini(counts) -> float:
    counts = np.asarray(counts, dtype=float)
    n = counts.sum()
    if n == 0:
        return 0.0
    p = counts / n
    return float(1.0 - np.sum(p**2))


def _best_split(X, y, idx, features, min_leaf):
    """Lowest weighted-Gini threshold split over ``features``; None if no valid split."""
    best = None
    n = len(idx)
    yi = y[idx]
    for f in features:
        xs = X[idx, f]
        order = np.argsort(xs, kind="stable")
        xs, ys = xs[order], yi[order]
        ones_left = np.cumsum(ys)[:-1].astype(float)
        n_left = np.arange(1, n, dtype=float)
        n_right = n - n_left
        ones_right = ys.sum() - ones_left
        p_l = ones_left / n_left
        p_r = ones_right / n_right
        g_l = 2 * p_l * (1 - p_l)
        g_r = 2 * p_r * (1 - p_r)
        score = (n_left * g_l + n_right * g_r) / n
        valid = (xs[1:] > xs[:-1]) & (n_left >= min_leaf) & (n_right >= min_leaf)
        if not valid.any():
            continue
        score = np.where(valid, score, np.inf)
        i = int(np.argmin(score))
        if best is None or score[i] < best[0]:
            lo, hi = xs[i], xs[i + 1]
            thr = 0.5 * (lo + hi)
            if not lo <= thr < hi:
                thr = lo
            best = (float(score[i]), int(f), float(thr))
    return best


class DecisionTree:
    """CART classifier for binary labels; ``x[f] <= threshold`` goes left.

    With ``max_depth=None`` and ``min_leaf=1`` every impure node that has a
    valid threshold is split, so consistent training data is fitted exactly.
    Leaf ties predict class 0.
    """

    def __init__(self, max_depth: int | None = None, min_leaf: int = 1, max_features: int | None = None, seed: int = 0):
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.max_features = max_features
        self.seed = seed

    def fit(self, X, y) -> "DecisionTree":
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=int)
        d = X.shape[1]
        rng = np.random.default_rng(self.seed)
        feature, threshold, left, right, value = [], [], [], [], []

        def new_node(idx):
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            ones = int(y[idx].sum())
            value.append(1 if 2 * ones > len(idx) else 0)
            return len(feature) - 1

        stack = [(new_node(np.arange(len(y))), np.arange(len(y)), 0)]
        while stack:
            node, idx, depth = stack.pop()
            ones = y[idx].sum()
            if ones == 0 or ones == len(idx):
                continue
            if self.max_depth is not None and depth >= self.max_depth:
                continue
            if self.max_features is not None and self.max_features < d:
                feats = rng.choice(d, self.max_features, replace=False)
                split = _best_split(X, y, idx, feats, self.min_leaf)
                if split is None:
                    split = _best_split(X, y, idx, range(d), self.min_leaf)
            else:
                split = _best_split(X, y, idx, range(d), self.min_leaf)
            if split is None:
                continue
            _, f, thr = split
            go_left = X[idx, f] <= thr
            li, ri = idx[go_left], idx[~go_left]
            feature[node], threshold[node] = f, thr
            left[node] = new_node(li)
            right[node] = new_node(ri)
            stack.append((right[node], ri, depth + 1))
            stack.append((left[node], li, depth + 1))

        self.feature = np.array(feature)
        self.threshold = np.array(threshold)
        self.left = np.array(left)
        self.right = np.array(right)
        self.value = np.array(value)
        return self

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        node = np.zeros(len(X), dtype=int)
        active = self.feature[node] >= 0
        while active.any():
            rows = np.flatnonzero(active)
            cur = node[rows]
            goes_left = X[rows, self.feature[cur]] <= self.threshold[cur]
            node[rows] = np.where(goes_left, self.left[cur], self.right[cur])
            active = self.feature[node] >= 0
        return self.value[node]


class RandomForest:
    """Bagged decision trees with random feature subsets at each split.

    ``max_features=None`` uses ``round(sqrt(n_features))``. The vote is a
    simple majority; an even split goes to class 0.
    """

    def __init__(
        self,
        n_trees: int = 100,
        max_features: int | None = None,
        bootstrap: bool = True,
        seed: int = 0,
        max_depth: int | None = None,
    ):
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.max_features = max_features
        self.bootstrap = bootstrap
        self.seed = seed
        self.trees: list[DecisionTree] = []

    def fit(self, X, y) -> "RandomForest":
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=int)
        n, d = X.shape
        m = self.max_features or max(1, int(round(np.sqrt(d))))
        rng = np.random.default_rng(self.seed)
        self.trees = []
        for _ in range(self.n_trees):
            tree_seed = int(rng.integers(2**31))
            idx = rng.integers(0, n, size=n) if self.bootstrap else np.arange(n)
            tree = DecisionTree(max_depth=self.max_depth, max_features=m, seed=tree_seed).fit(X[idx], y[idx])
            self.trees.append(tree)
        return self

    def predict(self, X) -> np.ndarray:
        votes = np.sum([t.predict(X) for t in self.trees], axis=0)
        return (2 * votes > len(self.trees)).astype(int)
