from dataclasses import replace

import numpy as np
import pytest

from shiftdecomp import (
    Dataset,
    DegenerateEstimateError,
    FitSettings,
    fit_aggregate_nuisances,
    fit_outcome_base,
    fit_outcome_nuisances,
    outcome_terms,
    split,
    value_conditional_outcome,
)
from shiftdecomp.learners import LearnerConfig, RiskModel, constant_learner
from shiftdecomp.outcome import fit_phantom_ratio
from shiftdecomp.simulate import DiscreteDGP, gaussian_logistic, generate

GLM2 = (LearnerConfig("logistic_poly", 2, 0.01),)


@pytest.fixture(scope="module")
def fitted(gaussian_small, fast_settings):
    spec, ds, plan = gaussian_small
    nuis = fit_aggregate_nuisances(ds, plan, fast_settings)
    base = fit_outcome_base(ds, plan, nuis, fast_settings, spec.loss_function())
    return ds, plan, base


def _value(s, ds, plan, base, settings, **kw):
    return value_conditional_outcome(s, ds, plan, base, fit_outcome_nuisances(s, ds, plan, base, settings), **kw)


def test_full_subset_is_exact(fitted, fast_settings):
    ds, plan, base = fitted
    v = _value((0, 1, 2), ds, plan, base, fast_settings)
    assert v.num == 0.0 and v.value.point == 1.0


def test_partial_value_has_centred_influence(fitted, fast_settings):
    ds, plan, base = fitted
    v = _value((2,), ds, plan, base, fast_settings)
    assert abs(v.influence.mean()) < 1e-10
    assert v.den > 0 and v.value.se > 0


def test_no_outcome_shift_is_undefined(fast_settings):
    spec = gaussian_logistic(n=2000, seed=4)
    spec = spec.with_(target_coef=spec.source_coef)
    ds = generate(spec)
    plan = split(ds, 0.8, 4)
    nuis = fit_aggregate_nuisances(ds, plan, fast_settings)
    base = fit_outcome_base(ds, plan, nuis, fast_settings, spec.loss_function())
    with pytest.raises(DegenerateEstimateError, match="no outcome-shift variation"):
        _value((0,), ds, plan, base, fast_settings)


def _constant_risk(q):
    return RiskModel(constant_learner(q, "classification", "test"), 20)


def test_phantom_ratio_is_flat_under_independence():
    rng = np.random.default_rng(5)
    n = 3000
    rows = Dataset(rng.normal(size=(n, 1)), rng.normal(size=(n, 3)), rng.integers(0, 2, n),
                   np.ones(n), np.zeros(n)).take(np.arange(n))
    m = fit_phantom_ratio(rows, (0,), _constant_risk(0.3), GLM2, seed=1)
    r = m.ratio(np.hstack([rows.w, rows.z, np.full((n, 1), 0.3)]))
    assert abs(r.mean() - 1) < 0.1 and np.quantile(np.abs(r - 1), 0.9) < 0.25


def _copy_pair(n, rng):
    z1 = rng.integers(0, 2, n)
    z2 = np.where(rng.random(n) < 0.9, z1, 1 - z1)
    return Dataset(np.zeros((n, 0)), np.column_stack([z1, z2]), rng.integers(0, 2, n), np.ones(n), np.zeros(n))


def test_phantom_ratio_matches_enumeration():
    rows = _copy_pair(10_000, np.random.default_rng(6))
    m = fit_phantom_ratio(rows, (0,), _constant_risk(0.3), GLM2, seed=2)
    # p(z1=1, z2=1) / (p(z1=1) p(z2=1)) = 0.45 / 0.25
    fitted = m.ratio(np.array([[1.0, 1.0, 0.3]]))[0]
    assert fitted == pytest.approx(1.8, rel=0.15)


def test_phantom_ratio_is_seeded():
    rows = _copy_pair(2000, np.random.default_rng(7))
    X = np.array([[0.0, 1.0, 0.3], [1.0, 1.0, 0.3]])
    a = fit_phantom_ratio(rows, (0,), _constant_risk(0.3), GLM2, seed=3).ratio(X)
    b = fit_phantom_ratio(rows, (0,), _constant_risk(0.3), GLM2, seed=3).ratio(X)
    assert np.array_equal(a, b)


def test_subsampled_inner_average_tracks_exact_sum(fast_settings):
    spec = gaussian_logistic(n=2000, seed=8)
    ds = generate(spec)
    plan = split(ds, 0.8, 8)
    nuis = fit_aggregate_nuisances(ds, plan, fast_settings)
    base = fit_outcome_base(ds, plan, nuis, fast_settings, spec.loss_function())
    on = fit_outcome_nuisances((0,), ds, plan, base, fast_settings)
    n1_ev = int((ds.domain[plan.eval_indices] == 1).sum())
    exact, _ = outcome_terms((0,), ds, plan, base, on, inner_subsample=n1_ev)
    sub, _ = outcome_terms((0,), ds, plan, base, on, inner_subsample=100)
    assert abs(exact.point - sub.point) <= 2 * exact.se


def test_bin_edge_diagnostic(fitted, fast_settings):
    ds, plan, base = fitted
    edged = replace(base, risk=RiskModel(_EdgeSnapped(base.risk), 20))
    v = _value((1,), ds, plan, edged, fast_settings)
    assert any(w.startswith("bin_edge_fraction:1.0000") for w in v.warnings)


def test_discrete_denominator_matches_enumeration():
    dgp = DiscreteDGP(seed=31)
    ds = dgp.generate()
    plan = split(ds, 0.8, 31)
    nuis = dgp.oracle_nuisances()
    settings = FitSettings(GLM2 + (LearnerConfig("logistic_poly", 3, 0.01),), B=dgp.B)
    base = fit_outcome_base(ds, plan, nuis, settings, dgp.loss_function())
    on = fit_outcome_nuisances((0,), ds, plan, base, settings)
    num, den = outcome_terms((0,), ds, plan, base, on)
    assert abs(den.point - dgp.outcome_den()) < 3 * den.se
    assert abs(num.point - dgp.outcome_num((0,))) < 3 * max(num.se, 1e-3)


class _EdgeSnapped:
    """Fitted risk moved onto the nearest rounding boundary of the 20-bin grid."""

    def __init__(self, risk):
        self.risk = risk

    def predict(self, X):
        q = self.risk.q(X)
        return np.clip((np.floor(q * 20) + 0.5) / 20, 0, 1)
