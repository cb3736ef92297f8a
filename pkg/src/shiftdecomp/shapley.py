"""Shapley attributions from subset values via kernel-weighted least squares.

Subsets are drawn with probability proportional to the Shapley kernel, the
values of the unique draws are regressed on membership indicators with the
empty-set intercept and full-set prediction pinned, and confidence intervals
add a subset-sampling variance to the propagated estimation variance.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from math import comb
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigError, DegenerateEstimateError
from .inference import EstimateWithCI, SubsetValue

Subset = tuple[int, ...]


def kernel_weight(m: int, k: int) -> float:
    """Shapley kernel weight of one subset of size k out of m (0 < k < m)."""
    return (m - 1) / (comb(m, k) * k * (m - k))


@dataclass(frozen=True)
class SubsetSamplePlan:
    m2: int
    gamma: float
    n_draws: int
    subsets: tuple[Subset, ...]
    counts: tuple[float, ...]
    exact: bool = False

    @property
    def n_unique(self) -> int:
        return len(self.subsets)


def _order(subsets) -> list[Subset]:
    return sorted(subsets, key=lambda s: (len(s), s))


def exact_plan(m2: int) -> SubsetSamplePlan:
    """Every subset, weighted by the Shapley kernel; no sampling variance."""
    if m2 < 1:
        raise ConfigError("need at least one conditional covariate")
    subsets, weights = [(), tuple(range(m2))], [1.0, 1.0]
    for k in range(1, m2):
        for s in combinations(range(m2), k):
            subsets.append(s)
            weights.append(kernel_weight(m2, k))
    order = sorted(range(len(subsets)), key=lambda i: (len(subsets[i]), subsets[i]))
    return SubsetSamplePlan(m2, float("inf"), 0, tuple(subsets[i] for i in order),
                            tuple(weights[i] for i in order), exact=True)


def sample_subsets(m2: int, gamma: float = 1.0, n_ev: int = 1, seed: int = 0) -> SubsetSamplePlan:
    """Draw floor(gamma * n_ev) subsets from the Shapley kernel.

    The empty and full sets are always included (count 1; the solver pins
    them). With a single variable there is nothing to sample.
    """
    if m2 < 1:
        raise ConfigError("need at least one conditional covariate")
    n_draws = int(np.floor(gamma * n_ev))
    if n_draws < 2:
        raise ConfigError(f"gamma * n_ev = {gamma * n_ev:g} gives fewer than 2 subset draws")
    if m2 == 1:
        return SubsetSamplePlan(1, float(gamma), n_draws, ((), (0,)), (1.0, 1.0), exact=True)
    rng = np.random.default_rng(seed)
    ks = np.arange(1, m2)
    p = 1.0 / (ks * (m2 - ks))
    sizes = rng.choice(ks, size=n_draws, p=p / p.sum())
    ranks = np.argsort(rng.random((n_draws, m2)), axis=1).argsort(axis=1)
    members = ranks < sizes[:, None]
    codes = members @ (1 << np.arange(m2, dtype=np.int64))
    uniq, cnt = np.unique(codes, return_counts=True)
    found = {tuple(int(j) for j in range(m2) if (c >> j) & 1): int(n) for c, n in zip(uniq, cnt)}
    found[()] = 1
    found[tuple(range(m2))] = 1
    subsets = _order(found)
    return SubsetSamplePlan(m2, float(gamma), n_draws, tuple(subsets),
                            tuple(float(found[s]) for s in subsets))


@dataclass(frozen=True, eq=False)
class ShapleyAttribution:
    """phi[0] is v(empty); phi[j] for j >= 1 is the attribution of variable j."""

    phi: tuple[EstimateWithCI, ...]
    target: str
    n_unique_subsets: int
    names: tuple[str, ...] = ()
    efficiency_residual: float = 0.0
    sampling_se: tuple[float, ...] = ()
    warnings: tuple[str, ...] = field(default=())

    def to_dict(self) -> dict:
        names = ("baseline",) + tuple(self.names or (f"Z{j}" for j in range(1, len(self.phi))))
        return {
            "target": self.target,
            "n_unique_subsets": self.n_unique_subsets,
            "efficiency_residual": self.efficiency_residual,
            "warnings": list(self.warnings),
            "phi": [dict(e.to_dict(n), sampling_se=ss) for n, e, ss
                    in zip(names, self.phi, self.sampling_se or (0.0,) * len(self.phi))],
        }


def _design(plan: SubsetSamplePlan):
    m = plan.m2
    full = tuple(range(m))
    index = {s: i for i, s in enumerate(plan.subsets)}
    if () not in index or full not in index:
        raise ConfigError("subset plan must contain the empty and full sets")
    inner = [i for i, s in enumerate(plan.subsets) if s not in ((), full)]
    Z = np.zeros((len(inner), m))
    for r, i in enumerate(inner):
        Z[r, list(plan.subsets[i])] = 1.0
    A = Z[:, :-1] - Z[:, -1:]
    # t = T @ v, with v ordered like plan.subsets
    T = np.zeros((len(inner), plan.n_unique))
    T[np.arange(len(inner)), inner] = 1.0
    T[:, index[()]] += Z[:, -1] - 1.0
    T[:, index[full]] -= Z[:, -1]
    c = np.asarray(plan.counts, dtype=float)[inner]
    return A, T, c, index[()], index[full]


def solve_shapley(values: Sequence[float] | Sequence[SubsetValue] | Mapping, plan: SubsetSamplePlan,
                  alpha: float = 0.1, target: str = "", names: Sequence[str] = (),
                  influence: np.ndarray | None = None) -> ShapleyAttribution:
    """Constrained kernel-weighted least squares for Shapley values.

    ``values`` follows ``plan.subsets`` order (or is a mapping keyed by
    subset). Influence vectors are taken from SubsetValue items or from the
    ``influence`` matrix (subsets x rows); without either, only the
    subset-sampling variance enters the intervals.
    """
    m = plan.m2
    items = [values[s] for s in plan.subsets] if isinstance(values, Mapping) else list(values)
    if len(items) != plan.n_unique:
        raise ConfigError(f"expected {plan.n_unique} subset values, got {len(items)}")
    if plan.n_unique < m + 1:
        raise DegenerateEstimateError(
            f"only {plan.n_unique} unique subsets for {m} variables; increase gamma")
    if items and isinstance(items[0], SubsetValue):
        v = np.array([it.value.point for it in items])
        influence = np.vstack([it.influence for it in items])
    else:
        v = np.asarray(items, dtype=float)
    warnings = []
    U = plan.n_unique
    if m == 1:
        L = np.zeros((2, U))
        i0, iF = plan.subsets.index(()), plan.subsets.index((0,))
        L[0, i0] = 1.0
        L[1, iF], L[1, i0] = 1.0, -1.0
        g_cov = np.zeros((1, 1))
        M = np.zeros((1, 0))
    else:
        A, T, c, i0, iF = _design(plan)
        wsum = c.sum()
        H = (A * c[:, None]).T @ A / wsum
        if np.linalg.cond(H) > 1e12:
            Hinv = np.linalg.pinv(H)
            warnings.append("near_singular_design")
        else:
            Hinv = np.linalg.inv(H)
        Theta = Hinv @ (A * c[:, None]).T @ T / wsum  # (m-1) x U
        base = np.zeros(U)
        base[iF], base[i0] = 1.0, -1.0
        L = np.zeros((m + 1, U))
        L[0, i0] = 1.0
        L[1:m] = Theta
        L[m] = base - Theta.sum(axis=0)
        M = np.vstack([np.eye(m - 1), -np.ones((1, m - 1))])
        theta = Theta @ v
        resid = A @ theta - T @ v
        if plan.exact:
            g_cov = np.zeros((m - 1, m - 1))
        else:
            G = (Hinv @ (A * resid[:, None]).T).T  # per unique subset
            g_cov = (G * c[:, None]).T @ G / wsum
    phi = L @ v
    if influence is not None:
        infl = L @ influence
        n = influence.shape[1]
        var_v = infl.var(axis=1, ddof=1) / n if n > 1 else np.zeros(m + 1)
    else:
        n = 0
        var_v = np.zeros(m + 1)
    var_s = np.zeros(m + 1)
    if m > 1 and not plan.exact:
        var_s[1:] = np.diag(M @ g_cov @ M.T) / plan.n_draws
    se = np.sqrt(var_v + var_s)
    residual = float(phi[1:].sum() - (v[plan.subsets.index(tuple(range(m)))] - v[plan.subsets.index(())]))
    ests = tuple(EstimateWithCI.from_se(phi[j], se[j], alpha, n) for j in range(m + 1))
    return ShapleyAttribution(ests, target, plan.n_unique, tuple(names), residual,
                              tuple(float(x) for x in np.sqrt(var_s)), tuple(warnings))


def exact_shapley(value_fn, m: int) -> np.ndarray:
    """Shapley values by enumeration of marginal contributions (reference)."""
    phi = np.zeros(m)
    for j in range(m):
        others = [i for i in range(m) if i != j]
        for k in range(m):
            w = 1.0 / (m * comb(m - 1, k))
            for s in combinations(others, k):
                phi[j] += w * (value_fn(tuple(sorted(s + (j,)))) - value_fn(s))
    return phi
