"""Synthetic generators, ground-truth oracles and coverage experiments."""

from .coverage import (
    CoverageRow,
    CoverageTable,
    coverage_experiment,
    oracle_truths,
    parse_target,
    simulate_estimates,
)
from .dgp import (
    BUILDERS,
    DGPSpec,
    LinearThreshold,
    covariate_mixture,
    gaussian_logistic,
    generate,
    uniform_logistic,
)
from .discrete import DiscreteDGP

__all__ = [
    "BUILDERS", "CoverageRow", "CoverageTable", "DGPSpec", "DiscreteDGP", "LinearThreshold",
    "coverage_experiment", "covariate_mixture", "gaussian_logistic", "generate", "oracle_truths",
    "parse_target", "simulate_estimates", "uniform_logistic",
]
