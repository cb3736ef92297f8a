"""Density ratios by probabilistic classification."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import DataError
from .selection import FittedLearner, LearnerConfig, fit_cv

DEFAULT_CLIP = (0.01, 0.99)


@dataclass(frozen=True, eq=False)
class DensityRatioModel:
    """ratio(x) = p/(1-p) * prior_correction with p = clip(P(numerator | x)).

    ``prior_correction`` is n_den / n_num, undoing the class imbalance of the
    pooled training sample.
    """

    classifier: FittedLearner
    prior_correction: float
    clip: tuple[float, float] = DEFAULT_CLIP

    def probability(self, X: np.ndarray) -> np.ndarray:
        return np.clip(self.classifier.predict(X), *self.clip)

    def ratio(self, X: np.ndarray) -> np.ndarray:
        p = self.probability(X)
        return p / (1.0 - p) * self.prior_correction

    __call__ = ratio

    def clipped_fraction(self, X: np.ndarray) -> float:
        raw = self.classifier.predict(X)
        lo, hi = self.clip
        return float(np.mean((raw < lo) | (raw > hi))) if raw.size else 0.0


def ratio_from_probability(p: np.ndarray, n_num: int, n_den: int,
                           clip: tuple[float, float] = DEFAULT_CLIP) -> np.ndarray:
    """Prior-corrected odds of a numerator-class probability."""
    p = np.clip(np.asarray(p, dtype=float), *clip)
    return p / (1.0 - p) * (n_den / n_num)


def fit_density_ratio(
    numerator: np.ndarray,
    denominator: np.ndarray,
    candidates: Sequence[LearnerConfig],
    folds: int = 3,
    seed: int = 0,
    clip: tuple[float, float] = DEFAULT_CLIP,
) -> DensityRatioModel:
    """Estimate p_num(x) / p_den(x) from one sample of each."""
    numerator = np.asarray(numerator, dtype=float)
    denominator = np.asarray(denominator, dtype=float)
    if numerator.shape[0] == 0 or denominator.shape[0] == 0:
        raise DataError("density ratio needs non-empty numerator and denominator samples")
    if numerator.ndim != 2 or denominator.ndim != 2 or numerator.shape[1] != denominator.shape[1]:
        raise DataError("numerator and denominator features must have the same width")
    if not 0.0 < clip[0] < clip[1] < 1.0:
        raise DataError("clip must satisfy 0 < lo < hi < 1")
    X = np.vstack([numerator, denominator])
    label = np.concatenate([np.ones(len(numerator)), np.zeros(len(denominator))])
    clf = fit_cv(candidates, X, label, folds, seed, task="classification")
    return DensityRatioModel(clf, len(denominator) / len(numerator), tuple(clip))
