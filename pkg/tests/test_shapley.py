from math import comb

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shiftdecomp import (
    ConfigError,
    DegenerateEstimateError,
    EstimateWithCI,
    SubsetValue,
    exact_plan,
    exact_shapley,
    sample_subsets,
    solve_shapley,
)
from shiftdecomp.shapley import SubsetSamplePlan, kernel_weight


def smooth_game(m, seed):
    rng = np.random.default_rng(seed)
    a, B = rng.uniform(0, 1, m), rng.normal(0, 0.3, (m, m))

    def v(s):
        s = list(s)
        return float(np.tanh(a[s].sum() + B[np.ix_(s, s)].sum() / 2))
    return v


def expected_unique(m, draws):
    ks = np.arange(1, m)
    p = 1.0 / (ks * (m - ks))
    p /= p.sum()
    return 2 + sum(comb(m, k) * (1 - (1 - p[k - 1] / comb(m, k)) ** draws) for k in ks)


def test_two_variable_kernel_is_symmetric():
    assert kernel_weight(2, 1) == 0.5
    plan = sample_subsets(2, 1.0, 400, seed=0)
    assert plan.subsets == ((), (0,), (1,), (0, 1))
    a, b = plan.counts[1], plan.counts[2]
    assert a + b == 400 and abs(a - b) < 4 * 2 * np.sqrt(400 * 0.25)


def test_two_variable_example():
    att = solve_shapley({(): 0.0, (0,): 0.6, (1,): 0.2, (0, 1): 1.0}, exact_plan(2))
    assert [e.point for e in att.phi] == pytest.approx([0.0, 0.7, 0.3], abs=1e-12)


def test_dummy_game():
    plan = sample_subsets(5, 1.0, 300, seed=1)
    att = solve_shapley([0.37] * plan.n_unique, plan)
    assert att.phi[0].point == pytest.approx(0.37)
    assert np.allclose([e.point for e in att.phi[1:]], 0.0, atol=1e-12)


@pytest.mark.parametrize("m", [1, 2, 3, 5])
def test_full_enumeration_is_exact(m):
    v = smooth_game(m, m)
    plan = exact_plan(m)
    att = solve_shapley([v(s) for s in plan.subsets], plan)
    assert np.allclose([e.point for e in att.phi[1:]], exact_shapley(v, m), atol=1e-10)
    assert all(e.se == 0.0 for e in att.phi)


def test_sampled_matches_exact_within_inflated_interval():
    v = smooth_game(6, 0)
    plan = sample_subsets(6, 1.0, 600, seed=0)
    att = solve_shapley([v(s) for s in plan.subsets], plan)
    exact = exact_shapley(v, 6)
    for j in range(6):
        assert abs(att.phi[j + 1].point - exact[j]) <= 2 * att.phi[j + 1].half_width


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 9), st.integers(0, 2**31), st.integers(20, 400))
def test_efficiency_always_holds(m, seed, draws):
    v = smooth_game(m, seed)
    plan = sample_subsets(m, 1.0, draws, seed)
    if plan.n_unique < m + 1:
        with pytest.raises(DegenerateEstimateError):
            solve_shapley([v(s) for s in plan.subsets], plan)
        return
    att = solve_shapley([v(s) for s in plan.subsets], plan)
    assert abs(att.efficiency_residual) < 1e-8
    total = sum(e.point for e in att.phi[1:])
    assert total == pytest.approx(v(tuple(range(m))) - v(()), abs=1e-8)


def test_exchangeable_variables_get_matching_attributions():
    # variables 0 and 1 play identical roles
    a = np.array([0.5, 0.5, 0.2, 0.9])

    def v(s):
        return float(np.sqrt(a[list(s)].sum()))
    plan = sample_subsets(4, 1.0, 200, seed=3)
    att = solve_shapley([v(s) for s in plan.subsets], plan)
    assert abs(att.phi[1].point - att.phi[2].point) <= att.phi[1].half_width + att.phi[2].half_width


def test_relabelling_permutes_attributions():
    m, perm = 5, [3, 0, 4, 1, 2]  # new label k is old variable perm[k]
    v = smooth_game(m, 9)
    plan = sample_subsets(m, 1.0, 300, seed=4)
    relabel = {s: tuple(sorted(perm.index(j) for j in s)) for s in plan.subsets}
    plan2 = SubsetSamplePlan(m, plan.gamma, plan.n_draws, tuple(relabel[s] for s in plan.subsets), plan.counts)
    a = solve_shapley([v(s) for s in plan.subsets], plan)
    b = solve_shapley([v(s) for s in plan.subsets], plan2)
    for k in range(m):
        assert b.phi[k + 1].point == pytest.approx(a.phi[perm[k] + 1].point, abs=1e-10)


def test_sampling_inflation_widens_intervals():
    m = 6
    v = smooth_game(m, 5)
    plan = sample_subsets(m, 1.0, 150, seed=5)
    assert plan.n_unique < 2 ** m
    rng = np.random.default_rng(0)
    values = [SubsetValue(s, EstimateWithCI.from_se(v(s), 0.01, 0.1, 200), rng.normal(size=200), 0, 1)
              for s in plan.subsets]
    inflated = solve_shapley(values, plan)
    plain = solve_shapley(values, SubsetSamplePlan(m, plan.gamma, plan.n_draws, plan.subsets, plan.counts, True))
    for a, b in zip(inflated.phi[1:], plain.phi[1:]):
        assert a.half_width > b.half_width


def test_small_variable_counts():
    att = solve_shapley([0.1, 0.8], sample_subsets(1, 1.0, 10))
    assert att.phi[1].point == pytest.approx(0.7)
    with pytest.raises(ConfigError):
        sample_subsets(3, 0.1, 5)


def test_sampler_is_seeded():
    assert sample_subsets(8, 1.0, 500, 7) == sample_subsets(8, 1.0, 500, 7)


def test_unique_count_matches_kernel_sampling():
    plan = sample_subsets(34, 1.0, 3000, seed=0)
    mean = expected_unique(34, 3000)
    assert abs(plan.n_unique - mean) < 60


@pytest.mark.xfail(strict=True, reason="kernel sampling gives about 2250 unique subsets at m2=34, "
                                       "not the low hundreds observed in the source study")
def test_unique_count_in_low_hundreds():
    assert sample_subsets(34, 1.0, 3000, seed=0).n_unique <= 400


@pytest.mark.parametrize("m", [2, 3, 4, 5, 6, 7, 8])
def test_missing_subsets_match_coupon_collector(m):
    draws = 10 * 2 ** m
    ks = np.arange(1, m)
    p = 1.0 / (ks * (m - ks))
    p /= p.sum()
    expected = sum(comb(m, k) * (1 - p[k - 1] / comb(m, k)) ** draws for k in ks)
    missing = [2 ** m - sample_subsets(m, 1.0, draws, seed=s).n_unique for s in range(100)]
    assert abs(np.mean(missing) - expected) < 4 * max(np.std(missing), 0.05) / 10 + 0.02
    if m <= 4:
        assert max(missing) == 0


@pytest.mark.xfail(strict=True, reason="at m2=8, 10*2^m2 kernel draws leave about 3 subsets unseen")
def test_ten_draws_per_subset_reach_every_subset_at_eight_variables():
    assert all(sample_subsets(8, 1.0, 2560, seed=s).n_unique == 256 for s in range(20))
