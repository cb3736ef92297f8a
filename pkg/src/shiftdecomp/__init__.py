"""Attribute a model's performance gap between two domains to shifts in
baseline covariates, conditional covariates and the conditional outcome."""

__version__ = "0.1.0"

from .aggregate import (  # noqa: E402
    AggregateResult,
    estimate_aggregate,
    estimate_aggregate_crossfit,
    estimate_aggregate_plugin,
)
from .covariate import (  # noqa: E402
    covariate_terms,
    fit_covariate_base,
    fit_covariate_nuisances,
    value_conditional_covariate,
)
from .data import (  # noqa: E402
    Dataset,
    SplitPlan,
    ZeroOneLoss,
    compute_loss,
    from_frame,
    kfold_plans,
    read_csv,
    split,
)
from .errors import ConfigError, DataError, DegenerateEstimateError, ShiftDecompError  # noqa: E402
from .inference import EstimateWithCI, SubsetValue  # noqa: E402
from .nuisance import AggregateNuisances, FitSettings, fit_aggregate_nuisances  # noqa: E402
from .outcome import (  # noqa: E402
    fit_outcome_base,
    fit_outcome_nuisances,
    outcome_terms,
    value_conditional_outcome,
)
from .pipeline import RunConfig, run  # noqa: E402
from .report import DecompositionReport  # noqa: E402
from .shapley import (  # noqa: E402
    ShapleyAttribution,
    SubsetSamplePlan,
    exact_plan,
    exact_shapley,
    sample_subsets,
    solve_shapley,
)

__all__ = [
    "AggregateNuisances", "AggregateResult", "ConfigError", "DataError", "Dataset",
    "DecompositionReport", "DegenerateEstimateError", "EstimateWithCI", "FitSettings", "RunConfig",
    "ShapleyAttribution", "ShiftDecompError", "SplitPlan", "SubsetSamplePlan", "SubsetValue",
    "ZeroOneLoss", "compute_loss", "covariate_terms", "estimate_aggregate",
    "estimate_aggregate_crossfit", "estimate_aggregate_plugin", "exact_plan", "exact_shapley",
    "fit_aggregate_nuisances", "fit_covariate_base", "fit_covariate_nuisances", "fit_outcome_base",
    "fit_outcome_nuisances", "from_frame", "kfold_plans", "outcome_terms", "read_csv", "run",
    "sample_subsets", "solve_shapley", "split", "value_conditional_covariate",
    "value_conditional_outcome",
]
