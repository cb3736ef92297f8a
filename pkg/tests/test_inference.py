import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from shiftdecomp import ConfigError, DataError, DegenerateEstimateError, EstimateWithCI, ShiftDecompError
from shiftdecomp.inference import center_by_domain, domain_weights, ratio_value


def test_interval_from_se():
    e = EstimateWithCI.from_se(1.0, 0.5, 0.1, 100)
    assert e.half_width == pytest.approx(1.6448536 * 0.5, rel=1e-6)
    assert e.covers(1.8) and not e.covers(1.9)
    assert EstimateWithCI.from_dict(e.to_dict("x")) == e


@given(arrays(float, 40, elements=st.floats(-1e3, 1e3)), st.integers(1, 39))
def test_centring_by_domain(rows, n1):
    domain = np.r_[np.zeros(40 - n1), np.ones(n1)]
    psi = center_by_domain(rows, domain)
    for d in (0, 1):
        assert abs(psi[domain == d].mean()) <= 1e-9 * (1 + np.abs(rows).max())


def test_domain_weights_average_to_one():
    domain = np.r_[np.zeros(30), np.ones(10)]
    w0, w1 = domain_weights(domain)
    assert w0.mean() == pytest.approx(1.0) and w1.mean() == pytest.approx(1.0)


def test_ratio_value_delta_method():
    rng = np.random.default_rng(0)
    domain = np.r_[np.zeros(500), np.ones(500)]
    num, den = 1 + rng.normal(size=1000), 4 + rng.normal(size=1000)
    v = ratio_value((0,), num, den, domain, 0.1, 1e-8)
    assert v.value.point == pytest.approx(1 - num.mean() / den.mean())
    assert v.den_se > 0 and v.num_se > 0
    with pytest.raises(DegenerateEstimateError):
        ratio_value((0,), num, den - 4, domain, 0.1, 1e-8)


def test_error_rendering_and_codes():
    e = DataError("bad column", stage="load", hint="check the header")
    assert str(e) == "[load] bad column (hint: check the header)"
    assert (ConfigError("x").exit_code, e.exit_code, DegenerateEstimateError("x").exit_code,
            ShiftDecompError("x").exit_code) == (2, 3, 4, 5)
