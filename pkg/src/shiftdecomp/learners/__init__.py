"""Nuisance-model stack: GLMs, boosted trees, selection, density ratios."""

from .ratio import DensityRatioModel, fit_density_ratio, ratio_from_probability
from .risk import RiskModel, bin_edge_fraction, bin_risk
from .selection import (
    FittedLearner,
    LearnerConfig,
    constant_learner,
    default_candidates,
    fast_candidates,
    fit_cv,
    infer_task,
)

__all__ = [
    "DensityRatioModel", "FittedLearner", "LearnerConfig", "RiskModel", "bin_edge_fraction",
    "bin_risk", "constant_learner", "default_candidates", "fast_candidates", "fit_cv",
    "fit_density_ratio", "infer_task", "ratio_from_probability",
]
