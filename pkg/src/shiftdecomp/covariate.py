"""Value of partial conditional covariate shifts.

A subset s of Z shifts only p(Z_s | W) to the target while Z_{-s} keeps its
source conditional. Its value is the share of the strata-level performance
change E_1[(mu_10 - mu_00)^2] that the partial shift reproduces.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset, SplitPlan
from .inference import EstimateWithCI, SubsetValue, center_by_domain, domain_weights, ratio_value
from .learners import DensityRatioModel, FittedLearner, constant_learner
from .nuisance import (
    AggregateNuisances,
    FitSettings,
    loss_pairs,
    select_columns,
    split_domains,
    subset_key,
    train_eval,
)

DEN_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class CovariateBase:
    """Subset-independent pieces: aggregate nuisances plus mu_10(w) = E_{.10}[loss | w]."""

    aggregate: AggregateNuisances
    mu_10: FittedLearner


@dataclass(frozen=True, eq=False)
class CovariateShiftNuisances:
    """Per-subset models, fit on the training partition.

    ``mu_0ms0``: E_0[loss | w, z_s]; ``mu_s0``: target mean of mu_0ms0 given w;
    ``pi_1s0``: p1(w, z_s)/p0(w, z_s). All three are None for the anchor
    subsets, which reuse aggregate models.
    """

    subset: tuple[int, ...]
    kind: str  # "empty" | "full" | "partial"
    mu_0ms0: FittedLearner | None = None
    mu_s0: FittedLearner | None = None
    pi_1s0: DensityRatioModel | None = None

    def labels(self) -> dict[str, str]:
        if self.kind != "partial":
            return {}
        return {"mu_0ms0": self.mu_0ms0.label, "mu_s0": self.mu_s0.label,
                "pi_1s0": self.pi_1s0.classifier.label}


def fit_covariate_base(dataset: Dataset, plan: SplitPlan, aggregate: AggregateNuisances,
                       settings: FitSettings, loss_fn=None) -> CovariateBase:
    tr, _ = train_eval(dataset, plan)
    _, tgt = split_domains(tr)
    inner = aggregate.mu_dot0.predict(tgt.x, loss_pairs(tgt, loss_fn))
    if dataset.m1 == 0:
        mu_10 = constant_learner(inner.mean(), "regression", "no_features")
    else:
        mu_10 = settings.fit("mu_10", tgt.w, inner, "regression")
    return CovariateBase(aggregate, mu_10)


def fit_covariate_nuisances(subset, dataset: Dataset, plan: SplitPlan,
                            settings: FitSettings) -> CovariateShiftNuisances:
    s = tuple(sorted(int(j) for j in subset))
    if not s:
        return CovariateShiftNuisances(s, "empty")
    if len(s) == dataset.m2:
        return CovariateShiftNuisances(s, "full")
    tr, _ = train_eval(dataset, plan)
    src, tgt = split_domains(tr)
    xs_src, xs_tgt = select_columns(src, s), select_columns(tgt, s)
    key = subset_key(dataset, s)
    mu_0ms0 = settings.fit(("mu_0ms0", key), xs_src, src.loss)
    pi_1s0 = settings.ratio(("pi_1s0", key), xs_tgt, xs_src)
    inner = mu_0ms0.predict(xs_tgt)
    if dataset.m1 == 0:
        mu_s0 = constant_learner(inner.mean(), "regression", "no_features")
    else:
        mu_s0 = settings.fit(("mu_s0", key), tgt.w, inner, "regression")
    return CovariateShiftNuisances(s, "partial", mu_0ms0, mu_s0, pi_1s0)


def _num_rows(loss, w0, w1, mu_dot0, pi_110, mu_10, mu_0ms0, pi_1s0, mu_s0):
    delta = mu_s0 - mu_10
    return (delta ** 2 * w1
            + 2 * delta * (loss - mu_0ms0) * pi_1s0 * w0
            - 2 * delta * (loss - mu_dot0) * pi_110 * w0
            + 2 * delta * (mu_0ms0 - mu_s0) * w1
            - 2 * delta * (mu_dot0 - mu_10) * w1)


def covariate_rows(ev: Dataset, base: CovariateBase, nuis: CovariateShiftNuisances,
                   loss_fn=None) -> tuple[np.ndarray, np.ndarray]:
    """Per-row numerator terms for the subset and for the empty set."""
    agg = base.aggregate
    w0, w1 = domain_weights(ev.domain)
    mu_dot0 = agg.mu_dot0.predict(ev.x, loss_pairs(ev, loss_fn))
    pi_110 = agg.pi_110.ratio(ev.x)
    mu_00 = agg.mu_00.predict(ev.w)
    pi_100 = agg.pi_100.ratio(ev.w)
    mu_10 = base.mu_10.predict(ev.w)
    common = (ev.loss, w0, w1, mu_dot0, pi_110, mu_10)
    den = _num_rows(*common, mu_00, pi_100, mu_00)
    if nuis.kind == "empty":
        return den, den
    if nuis.kind == "full":
        return _num_rows(*common, mu_dot0, pi_110, mu_10), den
    xs = select_columns(ev, nuis.subset)
    num = _num_rows(*common, nuis.mu_0ms0.predict(xs), nuis.pi_1s0.ratio(xs),
                    nuis.mu_s0.predict(ev.w))
    return num, den


def covariate_terms(subset, dataset: Dataset, plan: SplitPlan, base: CovariateBase,
                    nuisances: CovariateShiftNuisances, alpha: float = 0.1,
                    loss_fn=None) -> tuple[EstimateWithCI, EstimateWithCI]:
    """One-step estimates of num(s) = E_1[(mu_s0 - mu_10)^2] and num(empty)."""
    _, ev = train_eval(dataset, plan)
    num, den = covariate_rows(ev, base, nuisances, loss_fn)
    return (EstimateWithCI.from_influence(float(num.mean()), center_by_domain(num, ev.domain), alpha),
            EstimateWithCI.from_influence(float(den.mean()), center_by_domain(den, ev.domain), alpha))


def value_conditional_covariate(subset, dataset: Dataset, plan: SplitPlan, base: CovariateBase,
                                nuisances: CovariateShiftNuisances, alpha: float = 0.1,
                                loss_fn=None) -> SubsetValue:
    """One-step estimate of v_Z(s) = 1 - num(s)/num(empty) with a delta-method CI.

    Raises DegenerateEstimateError when the denominator is not positive
    (no covariate-shift variation to explain).
    """
    s = tuple(sorted(int(j) for j in subset))
    if s != nuisances.subset:
        raise ValueError(f"nuisances were fit for subset {nuisances.subset}, not {s}")
    _, ev = train_eval(dataset, plan)
    num, den = covariate_rows(ev, base, nuisances, loss_fn)
    tol = DEN_TOL * float(np.mean(ev.loss ** 2))
    return ratio_value(s, num, den, ev.domain, alpha, tol)
