import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from shiftdecomp import (
    Dataset,
    DegenerateEstimateError,
    covariate_terms,
    fit_aggregate_nuisances,
    fit_covariate_base,
    fit_covariate_nuisances,
    split,
    value_conditional_covariate,
)
from shiftdecomp.inference import ratio_value
from shiftdecomp.simulate import DiscreteDGP

from conftest import random_dataset


def _setup(ds, settings_, seed=0):
    plan = split(ds, 0.8, seed)
    nuis = fit_aggregate_nuisances(ds, plan, settings_)
    return plan, fit_covariate_base(ds, plan, nuis, settings_)


def _value(s, ds, plan, base, settings_):
    return value_conditional_covariate(s, ds, plan, base, fit_covariate_nuisances(s, ds, plan, settings_))


@settings(max_examples=8, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(st.integers(0, 2**31), st.integers(1, 4))
def test_anchor_values_are_exact(fast_settings, seed, m2):
    rng = np.random.default_rng(seed)
    ds = random_dataset(rng, 400, 350, m2=m2)
    # shift Z1 between domains and let the outcome follow it, so the
    # denominator is clearly positive
    z = ds.z + 1.5 * ds.domain[:, None] * (np.arange(m2) == 0)
    y = (rng.random(ds.n) < 1 / (1 + np.exp(-2 * z[:, 0]))).astype(int)
    ds = Dataset(ds.w, z, y, ds.domain, y.astype(float), pred=np.zeros(ds.n))
    plan, base = _setup(ds, fast_settings, seed)
    full_set = tuple(range(m2))
    e_num, e_den = covariate_terms((), ds, plan, base, fit_covariate_nuisances((), ds, plan, fast_settings))
    f_num, _ = covariate_terms(full_set, ds, plan, base,
                               fit_covariate_nuisances(full_set, ds, plan, fast_settings))
    assert e_num.point == e_den.point
    assert f_num.point == 0.0 and f_num.se == 0.0
    if e_den.point > 0:
        assert _value((), ds, plan, base, fast_settings).value.point == 0.0
        assert _value(full_set, ds, plan, base, fast_settings).value.point == 1.0


def test_discrete_numerator_matches_enumeration(fast_settings):
    dgp = DiscreteDGP(seed=21)
    ds = dgp.generate()
    plan, base = _setup(ds, fast_settings, 21)
    for s in [(0,), (1,), ()]:
        num, den = covariate_terms(s, ds, plan, base, fit_covariate_nuisances(s, ds, plan, fast_settings))
        assert abs(num.point - dgp.covariate_num(s)) < 3 * num.se, s
        assert abs(den.point - dgp.covariate_num(())) < 3 * den.se


def test_influence_is_centred(gaussian_small, fast_settings):
    _, ds, plan = gaussian_small
    nuis = fit_aggregate_nuisances(ds, plan, fast_settings)
    base = fit_covariate_base(ds, plan, nuis, fast_settings)
    v = _value((1,), ds, plan, base, fast_settings)
    assert abs(v.influence.mean()) < 1e-10
    assert v.value.ci_lo < v.value.point < v.value.ci_hi


def test_relabelling_columns_leaves_value_unchanged(gaussian_small, fast_settings):
    _, ds, plan = gaussian_small
    perm = [2, 0, 1]  # new column k holds old column perm[k]
    swapped = Dataset(ds.w, ds.z[:, perm], ds.y, ds.domain, ds.loss,
                      z_names=tuple(ds.z_names[j] for j in perm), pred=ds.pred)
    nuis = fit_aggregate_nuisances(ds, plan, fast_settings)
    base = fit_covariate_base(ds, plan, nuis, fast_settings)
    nuis2 = fit_aggregate_nuisances(swapped, plan, fast_settings)
    base2 = fit_covariate_base(swapped, plan, nuis2, fast_settings)
    for s in [(0,), (0, 2)]:
        s2 = tuple(sorted(perm.index(j) for j in s))
        a = _value(s, ds, plan, base, fast_settings)
        b = _value(s2, swapped, plan, base2, fast_settings)
        assert b.value.point == pytest.approx(a.value.point, abs=1e-6)


def test_no_covariate_shift_is_degenerate(fast_settings):
    ds = random_dataset(np.random.default_rng(22), 200, 200)
    ds = Dataset(ds.w, ds.z, ds.y, ds.domain, np.zeros(ds.n))
    plan, base = _setup(ds, fast_settings)
    with pytest.raises(DegenerateEstimateError, match="denominator"):
        _value((0,), ds, plan, base, fast_settings)


def test_negative_numerator_is_flagged():
    domain = np.r_[np.zeros(50), np.ones(50)]
    rng = np.random.default_rng(0)
    v = ratio_value((0,), -1.0 + 0.01 * rng.normal(size=100), 2.0 + rng.normal(size=100), domain, 0.1, 1e-8)
    assert "negative_numerator" in v.warnings
    assert v.value.point > 1.0


def test_subset_mismatch_is_refused(gaussian_small, fast_settings):
    _, ds, plan = gaussian_small
    nuis = fit_aggregate_nuisances(ds, plan, fast_settings)
    base = fit_covariate_base(ds, plan, nuis, fast_settings)
    with pytest.raises(ValueError):
        value_conditional_covariate((1,), ds, plan, base, fit_covariate_nuisances((0,), ds, plan, fast_settings))
