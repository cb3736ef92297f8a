"""Nuisance models shared by the aggregate and detailed estimators."""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .data import Dataset, SplitPlan
from .errors import DataError
from .learners import (
    DensityRatioModel,
    FittedLearner,
    LearnerConfig,
    RiskModel,
    constant_learner,
    default_candidates,
    fit_cv,
    fit_density_ratio,
)
from .learners.ratio import DEFAULT_CLIP


def derive_seed(seed: int, *keys) -> int:
    """Stable child seed from a master seed and any hashable-by-repr keys."""
    words = [int(seed) & 0xFFFFFFFF] + [zlib.crc32(repr(k).encode()) for k in keys]
    return int(np.random.SeedSequence(words).generate_state(1)[0])


@dataclass(frozen=True)
class FitSettings:
    """How nuisance models are selected and fit."""

    candidates: tuple[LearnerConfig, ...] = field(default_factory=lambda: tuple(default_candidates()))
    folds: int = 3
    seed: int = 0
    clip: tuple[float, float] = DEFAULT_CLIP
    B: int = 20

    def fit(self, name, X, y, task=None) -> FittedLearner:
        return fit_cv(self.candidates, X, y, self.folds, derive_seed(self.seed, name), task)

    def ratio(self, name, numerator, denominator) -> DensityRatioModel:
        if numerator.shape[1] == 0:
            return DensityRatioModel(constant_learner(0.5, "classification", "no_features"), 1.0, self.clip)
        return fit_density_ratio(numerator, denominator, self.candidates, self.folds,
                                 derive_seed(self.seed, name), self.clip)


@dataclass(frozen=True, eq=False)
class LossModel:
    """Conditional mean of the loss given features.

    With route ``"outcome"`` the learner models P(Y=1 | x) and the mean loss
    is l0 + (l1 - l0) * P(Y=1 | x), where (l0, l1) are the losses at Y=0 and
    Y=1. With route ``"direct"`` the learner regresses the loss itself.
    """

    learner: FittedLearner
    route: str

    def predict(self, X: np.ndarray, pairs=None) -> np.ndarray:
        if self.route == "outcome":
            if pairs is None:
                raise ValueError("outcome-route loss model needs per-row loss pairs")
            l0, l1 = pairs
            return l0 + (l1 - l0) * self.learner.predict(X)
        return self.learner.predict(X)

    @property
    def label(self) -> str:
        return f"{self.route}:{self.learner.label}"


def fit_loss_model(settings: FitSettings, name: str, X, y, loss, use_outcome: bool) -> LossModel:
    if use_outcome:
        return LossModel(settings.fit(name, X, y, "classification"), "outcome")
    return LossModel(settings.fit(name, X, loss), "direct")


def _sub(ds: Dataset, d: int) -> Dataset:
    return ds.take(np.flatnonzero(ds.domain == d))


def train_eval(dataset: Dataset, plan: SplitPlan) -> tuple[Dataset, Dataset]:
    tr, ev = dataset.take(plan.train_indices), dataset.take(plan.eval_indices)
    for part, name in ((tr, "training"), (ev, "evaluation")):
        if np.unique(part.domain).size < 2:
            raise DataError(f"{name} partition is missing a domain")
    return tr, ev


@dataclass(frozen=True, eq=False)
class AggregateNuisances:
    """Models behind the aggregate terms, all fit on the training partition.

    ``mu_00``: E_0[loss | w]; ``mu_dot0``: E_0[loss | w, z];
    ``pi_100``: p1(w)/p0(w); ``pi_110``: p1(w, z)/p0(w, z).
    """

    mu_00: FittedLearner
    mu_dot0: LossModel
    pi_100: DensityRatioModel
    pi_110: DensityRatioModel
    settings: FitSettings

    def labels(self) -> dict[str, str]:
        return {
            "mu_00": self.mu_00.label, "mu_dot0": self.mu_dot0.label,
            "pi_100": self.pi_100.classifier.label, "pi_110": self.pi_110.classifier.label,
        }

    def risk(self) -> RiskModel | None:
        """Source risk q = P_0(Y=1 | w, z), available when mu_dot0 routes through Y."""
        if self.mu_dot0.route != "outcome":
            return None
        return RiskModel(self.mu_dot0.learner, self.settings.B)


def fit_aggregate_nuisances(dataset: Dataset, plan: SplitPlan, settings: FitSettings) -> AggregateNuisances:
    tr, _ = train_eval(dataset, plan)
    src, tgt = _sub(tr, 0), _sub(tr, 1)
    use_outcome = dataset.pred is not None
    mu_00 = settings.fit("mu_00", src.w, src.loss)
    mu_dot0 = fit_loss_model(settings, "mu_dot0", src.x, src.y, src.loss, use_outcome)
    pi_100 = settings.ratio("pi_100", tgt.w, src.w)
    pi_110 = settings.ratio("pi_110", tgt.x, src.x)
    return AggregateNuisances(mu_00, mu_dot0, pi_100, pi_110, settings)


def loss_pairs(ds: Dataset, loss_fn=None):
    """Per-row (loss at Y=0, loss at Y=1), from stored labels or a loss function."""
    pairs = ds.loss_pairs()
    if pairs is None and loss_fn is not None:
        pairs = loss_fn.pairs(ds.w, ds.z)
    return pairs


def subset_key(ds: Dataset, z_idx: Sequence[int]) -> tuple[str, ...]:
    """Seed key for a Z subset: its column names, so relabelled columns reuse seeds."""
    return tuple(sorted(ds.z_names[j] for j in z_idx))


def split_domains(ds: Dataset) -> tuple[Dataset, Dataset]:
    return _sub(ds, 0), _sub(ds, 1)


def select_columns(ds: Dataset, z_idx: Sequence[int]) -> np.ndarray:
    """Feature matrix (w, z_s)."""
    return np.hstack([ds.w, ds.z[:, list(z_idx)]])
