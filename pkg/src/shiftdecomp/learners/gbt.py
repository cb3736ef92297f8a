"""Histogram gradient-boosted trees (Newton boosting, depth-wise growth)."""

from __future__ import annotations

import numpy as np
from scipy.special import expit


def _quantile_edges(col: np.ndarray, max_bins: int) -> np.ndarray:
    qs = np.quantile(col, np.linspace(0, 1, max_bins + 1)[1:-1])
    return np.unique(qs)


class GradientBoostedTrees:
    """Boosted regression trees on quantile-binned features.

    Trees are stored as flat arrays of a complete binary tree: node ``k`` has
    children ``2k+1`` (bin <= threshold) and ``2k+2``. A node that found no
    admissible split sends every row left.
    """

    def __init__(self, task: str = "classification", n_trees: int = 100, depth: int = 2,
                 learning_rate: float = 0.1, min_leaf: int = 20, leaf_ridge: float = 1.0,
                 max_bins: int = 32):
        self.task = task
        self.n_trees = n_trees
        self.depth = depth
        self.learning_rate = learning_rate
        self.min_leaf = min_leaf
        self.leaf_ridge = leaf_ridge
        self.max_bins = max_bins

    def _bin(self, X: np.ndarray) -> np.ndarray:
        out = np.empty(X.shape, dtype=np.int64)
        for j, e in enumerate(self.edges_):
            out[:, j] = np.searchsorted(e, X[:, j], side="right")
        return out

    def fit(self, X: np.ndarray, y: np.ndarray) -> "GradientBoostedTrees":
        y = y.astype(float)
        n, p = X.shape
        self.edges_ = [_quantile_edges(X[:, j], self.max_bins) for j in range(p)]
        Xb = self._bin(X)
        nb = self.max_bins
        D = self.depth
        n_internal = 2 ** D - 1
        if self.task == "classification":
            ybar = np.clip(y.mean(), 1e-6, 1 - 1e-6)
            self.init_ = float(np.log(ybar / (1 - ybar)))
        else:
            self.init_ = float(y.mean())
        F = np.full(n, self.init_)
        feats = np.zeros((self.n_trees, n_internal), dtype=np.int64)
        thrs = np.full((self.n_trees, n_internal), nb, dtype=np.int64)
        leaves = np.zeros((self.n_trees, 2 ** D))
        lam = self.leaf_ridge
        for t in range(self.n_trees):
            if self.task == "classification":
                pr = expit(F)
                g, h = pr - y, pr * (1 - pr)
            else:
                g, h = F - y, np.ones(n)
            node = np.zeros(n, dtype=np.int64)
            for level in range(D):
                first = 2 ** level - 1
                width = 2 ** level
                local = node - first
                best_gain = np.zeros(width)
                best_f = np.zeros(width, dtype=np.int64)
                best_t = np.full(width, nb, dtype=np.int64)
                for j in range(p):
                    key = local * nb + Xb[:, j]
                    size = width * nb
                    G = np.bincount(key, g, size).reshape(width, nb).cumsum(axis=1)
                    H = np.bincount(key, h, size).reshape(width, nb).cumsum(axis=1)
                    C = np.bincount(key, None, size).reshape(width, nb).cumsum(axis=1)
                    Gt, Ht, Ct = G[:, -1:], H[:, -1:], C[:, -1:]
                    gain = (G ** 2 / (H + lam) + (Gt - G) ** 2 / (Ht - H + lam)
                            - Gt ** 2 / (Ht + lam))
                    ok = (C >= self.min_leaf) & (Ct - C >= self.min_leaf)
                    gain = np.where(ok, gain, 0.0)
                    k = gain.argmax(axis=1)
                    gk = gain[np.arange(width), k]
                    better = gk > best_gain + 1e-12
                    best_gain[better] = gk[better]
                    best_f[better] = j
                    best_t[better] = k[better]
                feats[t, first:first + width] = best_f
                thrs[t, first:first + width] = best_t
                right = Xb[np.arange(n), best_f[local]] > best_t[local]
                node = 2 * node + 1 + right
            leaf = node - n_internal
            Gl = np.bincount(leaf, g, 2 ** D)
            Hl = np.bincount(leaf, h, 2 ** D)
            vals = -self.learning_rate * Gl / (Hl + lam)
            leaves[t] = vals
            F += vals[leaf]
        self.feats_, self.thrs_, self.leaves_ = feats, thrs, leaves
        return self

    def raw_score(self, X: np.ndarray) -> np.ndarray:
        Xb = self._bin(X)
        n = X.shape[0]
        rows = np.arange(n)
        F = np.full(n, self.init_)
        n_internal = 2 ** self.depth - 1
        for t in range(self.feats_.shape[0]):
            node = np.zeros(n, dtype=np.int64)
            f, th = self.feats_[t], self.thrs_[t]
            for _ in range(self.depth):
                node = 2 * node + 1 + (Xb[rows, f[node]] > th[node])
            F += self.leaves_[t][node - n_internal]
        return F

    def predict(self, X: np.ndarray) -> np.ndarray:
        F = self.raw_score(X)
        return expit(F) if self.task == "classification" else F
