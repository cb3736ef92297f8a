"""Aggregate decomposition of the loss gap into baseline, conditional
covariate and conditional outcome shift terms."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, SplitPlan, kfold_plans
from .errors import DataError
from .inference import EstimateWithCI, center_by_domain, domain_weights
from .nuisance import AggregateNuisances, FitSettings, fit_aggregate_nuisances, loss_pairs, train_eval

TERMS = ("lambda_W", "lambda_Z", "lambda_Y")


@dataclass(frozen=True, eq=False)
class AggregateResult:
    terms: dict[str, EstimateWithCI]
    influence: dict[str, np.ndarray] = field(repr=False)
    warnings: tuple[str, ...] = ()

    def __getitem__(self, key: str) -> EstimateWithCI:
        return self.terms[key]


def _finite(name: str, a: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(a)):
        raise DataError(f"nuisance model {name} produced non-finite values")
    return a


def nuisance_values(ev: Dataset, nuis: AggregateNuisances, loss_fn=None) -> dict[str, np.ndarray]:
    """Fitted nuisances evaluated on every evaluation row."""
    pairs = loss_pairs(ev, loss_fn)
    return {
        "mu_00": _finite("mu_00", nuis.mu_00.predict(ev.w)),
        "mu_dot0": _finite("mu_dot0", nuis.mu_dot0.predict(ev.x, pairs)),
        "pi_100": _finite("pi_100", nuis.pi_100.ratio(ev.w)),
        "pi_110": _finite("pi_110", nuis.pi_110.ratio(ev.x)),
    }


def aggregate_rows(loss: np.ndarray, domain: np.ndarray, v: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
    """Per-row one-step terms; their means are the estimates.

    Each row term is the estimate's influence function plus the estimate, so
    the three terms telescope to loss * (1{d=1}/p1 - 1{d=0}/p0) row by row.
    """
    w0, w1 = domain_weights(domain)
    e100 = (loss - v["mu_00"]) * v["pi_100"] * w0 + v["mu_00"] * w1
    e110 = (loss - v["mu_dot0"]) * v["pi_110"] * w0 + v["mu_dot0"] * w1
    return {
        "lambda_W": e100 - loss * w0,
        "lambda_Z": e110 - e100,
        "lambda_Y": loss * w1 - e110,
        "total": loss * w1 - loss * w0,
    }


def _result(points: dict[str, float], rows: dict[str, np.ndarray], domain: np.ndarray, alpha: float,
            extra_warnings=()) -> AggregateResult:
    terms, infl, warnings = {}, {}, list(extra_warnings)
    for name, r in rows.items():
        psi = center_by_domain(r, domain)
        infl[name] = psi
        est = EstimateWithCI.from_influence(points[name], psi, alpha)
        if est.se == 0.0:
            warnings.append(f"zero_variance:{name}")
        terms[name] = est
    return AggregateResult(terms, infl, tuple(warnings))


def estimate_aggregate(dataset: Dataset, plan: SplitPlan, nuisances: AggregateNuisances,
                       alpha: float = 0.1, loss_fn=None) -> AggregateResult:
    """Debiased estimates of the three aggregate terms and the total gap."""
    _, ev = train_eval(dataset, plan)
    rows = aggregate_rows(ev.loss, ev.domain, nuisance_values(ev, nuisances, loss_fn))
    return _result({k: float(r.mean()) for k, r in rows.items()}, rows, ev.domain, alpha)


def estimate_aggregate_plugin(dataset: Dataset, plan: SplitPlan, nuisances: AggregateNuisances,
                              alpha: float = 0.1, loss_fn=None) -> AggregateResult:
    """Plug-in estimates (no correction terms).

    The interval reuses the debiased standard error around the plug-in point;
    it is the naive comparison arm, not a valid CI.
    """
    _, ev = train_eval(dataset, plan)
    v = nuisance_values(ev, nuisances, loss_fn)
    t = ev.domain == 1
    s = ~t
    points = {
        "lambda_W": float(v["mu_00"][t].mean() - ev.loss[s].mean()),
        "lambda_Z": float(v["mu_dot0"][t].mean() - v["mu_00"][t].mean()),
        "lambda_Y": float(ev.loss[t].mean() - v["mu_dot0"][t].mean()),
        "total": float(ev.loss[t].mean() - ev.loss[s].mean()),
    }
    rows = aggregate_rows(ev.loss, ev.domain, v)
    return _result(points, rows, ev.domain, alpha, ("plugin_interval_not_valid",))


def estimate_aggregate_crossfit(dataset: Dataset, settings: FitSettings, folds: int = 5,
                                alpha: float = 0.1, seed: int = 0, loss_fn=None) -> AggregateResult:
    """Cross-fitted estimates: average the fold estimates, pool the
    fold-centred influence values over all rows."""
    points = {k: [] for k in TERMS + ("total",)}
    psis = {k: [] for k in points}
    for plan in kfold_plans(dataset, folds, seed):
        nuis = fit_aggregate_nuisances(dataset, plan, settings)
        res = estimate_aggregate(dataset, plan, nuis, alpha, loss_fn)
        for k in points:
            points[k].append(res[k].point)
            psis[k].append(res.influence[k])
    terms, infl = {}, {}
    for k in points:
        psi = np.concatenate(psis[k])
        infl[k] = psi
        terms[k] = EstimateWithCI.from_influence(float(np.mean(points[k])), psi, alpha)
    return AggregateResult(terms, infl)
