import numpy as np
import pytest

from shiftdecomp import Dataset, FitSettings, split
from shiftdecomp.learners import fast_candidates
from shiftdecomp.simulate import gaussian_logistic, generate


def random_dataset(rng, n0=60, n1=50, m1=1, m2=3, with_pred=True):
    n = n0 + n1
    y = rng.integers(0, 2, n)
    pred = rng.integers(0, 2, n)
    return Dataset(rng.normal(size=(n, m1)), rng.normal(size=(n, m2)), y,
                   np.r_[np.zeros(n0), np.ones(n1)], (pred != y).astype(float),
                   pred=pred if with_pred else None)


@pytest.fixture(scope="session")
def fast_settings():
    return FitSettings(tuple(fast_candidates()))


@pytest.fixture(scope="session")
def gaussian_small():
    """Appendix-style gaussian pair at a size that fits in unit-test time."""
    spec = gaussian_logistic(n=2000, seed=3)
    ds = generate(spec)
    return spec, ds, split(ds, 0.8, 3)


# acceptance lines, echoed after the run so they survive output capture
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
