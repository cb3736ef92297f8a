"""Polynomial logistic and ridge regression, fit by Newton / closed form."""

from __future__ import annotations

from itertools import combinations_with_replacement

import numpy as np
from scipy import linalg
from scipy.special import expit

CHUNK = 200_000


class PolynomialExpansion:
    """Standardize, then take all monomials of total degree 1..degree."""

    def __init__(self, degree: int):
        self.degree = degree

    def fit(self, X: np.ndarray) -> "PolynomialExpansion":
        self.mean_ = X.mean(axis=0)
        sd = X.std(axis=0)
        self.scale_ = np.where(sd > 1e-12, sd, 1.0)
        p = X.shape[1]
        self.terms_ = [c for d in range(1, self.degree + 1)
                       for c in combinations_with_replacement(range(p), d)]
        raw = self._raw(X)
        self.out_mean_ = raw.mean(axis=0)
        osd = raw.std(axis=0)
        self.out_scale_ = np.where(osd > 1e-12, osd, 1.0)
        return self

    def _raw(self, X: np.ndarray) -> np.ndarray:
        S = (X - self.mean_) / self.scale_
        out = np.empty((X.shape[0], len(self.terms_)))
        cache: dict[tuple, np.ndarray] = {}
        for k, t in enumerate(self.terms_):
            if len(t) == 1:
                col = S[:, t[0]]
            else:
                col = cache[t[:-1]] * S[:, t[-1]]
            cache[t] = col
            out[:, k] = col
        return out

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (self._raw(X) - self.out_mean_) / self.out_scale_


def _chunked(fn, X: np.ndarray) -> np.ndarray:
    if X.shape[0] <= CHUNK:
        return fn(X)
    return np.concatenate([fn(X[i:i + CHUNK]) for i in range(0, X.shape[0], CHUNK)])


class LogisticPoly:
    """Ridge-penalized logistic regression on polynomial features.

    Minimizes sum of log-losses + ridge/2 * ||beta||^2 (intercept unpenalized).
    """

    task = "classification"

    def __init__(self, degree: int = 1, ridge: float = 0.1, max_iter: int = 100, tol: float = 1e-8):
        self.degree = degree
        self.ridge = ridge
        self.max_iter = max_iter
        self.tol = tol

    def fit(self, X: np.ndarray, y: np.ndarray) -> "LogisticPoly":
        self.expansion_ = PolynomialExpansion(self.degree).fit(X)
        F = np.hstack([np.ones((X.shape[0], 1)), self.expansion_.transform(X)])
        y = y.astype(float)
        pen = np.full(F.shape[1], max(self.ridge, 1e-8))
        pen[0] = 1e-8
        ybar = np.clip(y.mean(), 1e-6, 1 - 1e-6)
        beta = np.zeros(F.shape[1])
        beta[0] = np.log(ybar / (1 - ybar))

        def objective(b):
            eta = F @ b
            return np.sum(np.logaddexp(0.0, eta) - y * eta) + 0.5 * np.sum(pen * b * b)

        obj = objective(beta)
        for _ in range(self.max_iter):
            p = expit(F @ beta)
            g = F.T @ (p - y) + pen * beta
            H = (F * (p * (1 - p))[:, None]).T @ F
            H[np.diag_indices_from(H)] += pen
            try:
                step = linalg.solve(H, g, assume_a="pos")
            except (linalg.LinAlgError, ValueError):
                step = np.linalg.lstsq(H, g, rcond=None)[0]
            t = 1.0
            while True:
                cand = beta - t * step
                new = objective(cand)
                if new <= obj + 1e-12 or t < 1e-6:
                    break
                t *= 0.5
            beta, delta, obj = cand, obj - new, new
            if np.max(np.abs(t * step)) < self.tol or abs(delta) < self.tol * (1 + abs(obj)):
                break
        self.coef_ = beta
        return self

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        return _chunked(lambda A: self.coef_[0] + self.expansion_.transform(A) @ self.coef_[1:], X)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return expit(self.decision_function(X))


class RidgePoly:
    """Ridge least squares on polynomial features (intercept unpenalized)."""

    task = "regression"

    def __init__(self, degree: int = 1, ridge: float = 0.1):
        self.degree = degree
        self.ridge = ridge

    def fit(self, X: np.ndarray, y: np.ndarray) -> "RidgePoly":
        self.expansion_ = PolynomialExpansion(self.degree).fit(X)
        F = self.expansion_.transform(X)
        ym = y.mean()
        A = F.T @ F
        A[np.diag_indices_from(A)] += max(self.ridge, 1e-10)
        self.coef_ = linalg.solve(A, F.T @ (y - ym), assume_a="pos")
        self.intercept_ = ym
        return self

    def predict(self, X: np.ndarray) -> np.ndarray:
        return _chunked(lambda A: self.intercept_ + self.expansion_.transform(A) @ self.coef_, X)


class ConstantModel:
    """Predicts a fixed value; used for featureless fits and constant targets."""

    def __init__(self, value: float, task: str = "regression"):
        self.value = float(value)
        self.task = task

    def fit(self, X, y) -> "ConstantModel":
        return self

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.full(X.shape[0], self.value)
