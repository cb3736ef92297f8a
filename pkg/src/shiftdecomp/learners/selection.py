"""Learner configurations and cross-validated model selection."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..errors import DataError, DegenerateEstimateError
from .gbt import GradientBoostedTrees
from .linear import ConstantModel, LogisticPoly, RidgePoly

KINDS = ("logistic_poly", "ridge_linear", "gbt")


@dataclass(frozen=True)
class LearnerConfig:
    """One candidate in a model-selection grid.

    ``logistic_poly`` and ``ridge_linear`` both mean "penalized polynomial
    GLM"; the task decides the link, so a single grid serves classifiers and
    regressors alike.
    """

    kind: str
    degree: int = 1
    ridge: float = 0.1
    n_trees: int = 100
    depth: int = 2
    learning_rate: float = 0.1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown learner kind {self.kind!r}")

    @property
    def label(self) -> str:
        if self.kind == "gbt":
            return f"gbt(trees={self.n_trees},depth={self.depth},lr={self.learning_rate:g})"
        return f"{self.kind}(degree={self.degree},ridge={self.ridge:g})"

    def build(self, task: str):
        if self.kind == "gbt":
            return GradientBoostedTrees(task, self.n_trees, self.depth, self.learning_rate)
        if task == "classification":
            return LogisticPoly(self.degree, self.ridge)
        return RidgePoly(self.degree, self.ridge)


def default_candidates() -> list[LearnerConfig]:
    glm = [LearnerConfig("logistic_poly", d, lam) for d in (1, 2, 3) for lam in (0.01, 0.1, 1.0)]
    trees = [LearnerConfig("gbt", n_trees=t, depth=k) for t in (50, 200) for k in (1, 2, 3)]
    return glm + trees


def fast_candidates() -> list[LearnerConfig]:
    """Small polynomial grid for simulation studies where runtime matters."""
    return [LearnerConfig("logistic_poly", d, 0.1) for d in (1, 2, 3)]


@dataclass(frozen=True, eq=False)
class FittedLearner:
    """A selected, refit model. ``predict`` gives E[target | x] (a probability
    for classifiers)."""

    model: object
    task: str
    config: LearnerConfig | None
    cv_scores: tuple[float, ...] = ()
    flags: tuple[str, ...] = field(default=())

    def predict(self, X: np.ndarray) -> np.ndarray:
        out = self.model.predict(np.asarray(X, dtype=float))
        if self.task == "classification":
            out = np.clip(out, 0.0, 1.0)
        return out

    predict_proba = predict

    @property
    def label(self) -> str:
        if self.config is None:
            return "constant"
        return self.config.label


def infer_task(y: np.ndarray) -> str:
    return "classification" if np.all(np.isin(y, (0, 1))) else "regression"


def constant_learner(value: float, task: str, flag: str) -> FittedLearner:
    return FittedLearner(ConstantModel(value, task), task, None, (), (flag,))


def _folds(y: np.ndarray, task: str, folds: int, rng: np.random.Generator) -> np.ndarray:
    assign = np.empty(y.shape[0], dtype=int)
    groups = [np.flatnonzero(y == c) for c in (0, 1)] if task == "classification" else [np.arange(y.shape[0])]
    offset = 0
    for g in groups:
        perm = rng.permutation(g)
        assign[perm] = (np.arange(perm.size) + offset) % folds
        offset += perm.size
    return assign


def _score(pred: np.ndarray, y: np.ndarray, task: str) -> float:
    if task == "classification":
        p = np.clip(pred, 1e-12, 1 - 1e-12)
        return float(-np.mean(y * np.log(p) + (1 - y) * np.log1p(-p)))
    return float(np.mean((pred - y) ** 2))


def _try_fit(cfg: LearnerConfig, X, y, task):
    try:
        with np.errstate(all="ignore"):
            model = cfg.build(task).fit(X, y)
    except (np.linalg.LinAlgError, ValueError, FloatingPointError):
        return None
    return model


def fit_cv(
    candidates: Sequence[LearnerConfig],
    X: np.ndarray,
    y: np.ndarray,
    folds: int = 3,
    seed: int = 0,
    task: str | None = None,
) -> FittedLearner:
    """Choose the candidate with the best mean held-out score and refit it on
    all rows. Scores are log-loss (classification) or squared error; ties go
    to the earlier candidate.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise DataError("features and targets must have matching rows")
    task = task or infer_task(y)
    n = y.shape[0]
    if n < folds:
        raise DataError(f"need at least {folds} rows for {folds}-fold selection, got {n}")
    if np.ptp(y) == 0:
        return constant_learner(y[0], task, "constant_target")
    if X.shape[1] == 0:
        return constant_learner(y.mean(), task, "no_features")
    if not candidates:
        raise DataError("empty candidate list")
    rng = np.random.default_rng(seed)
    assign = _folds(y, task, folds, rng)
    scores = []
    for cfg in candidates:
        total = 0.0
        for k in range(folds):
            tr, te = assign != k, assign == k
            if len(candidates) == 1:
                break
            model = _try_fit(cfg, X[tr], y[tr], task)
            pred = None if model is None else model.predict(X[te])
            if pred is None or not np.all(np.isfinite(pred)):
                total = np.inf
                break
            if task == "classification":
                pred = np.clip(pred, 0, 1)
            total += _score(pred, y[te], task) * te.sum()
        scores.append(total / n)
    order = np.argsort(np.asarray(scores), kind="stable")
    for i in order:
        if not np.isfinite(scores[i]):
            break
        model = _try_fit(candidates[i], X, y, task)
        if model is not None:
            pred = model.predict(X[:1])
            if np.all(np.isfinite(pred)):
                return FittedLearner(model, task, candidates[i], tuple(scores))
    raise DegenerateEstimateError("no candidate learner could be fit; widen the candidate grid")
