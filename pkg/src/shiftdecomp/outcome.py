"""Value of partial conditional outcome shifts.

The s-partial outcome shift recalibrates the source risk using only
(W, Z_s, Q_bin): target outcomes are averaged over "phantom" Z_{-s} drawn from
the target conditional given (W, Z_s) and the same binned source risk.
The estimator is a V-statistic over pairs of target evaluation rows.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy.stats import norm

from .data import Dataset, SplitPlan
from .errors import ConfigError, DegenerateEstimateError
from .inference import EstimateWithCI, SubsetValue, center_by_domain, domain_weights, ratio_value
from .learners import DensityRatioModel, FittedLearner, LearnerConfig, RiskModel, bin_edge_fraction
from .learners.ratio import DEFAULT_CLIP, fit_density_ratio
from .nuisance import (
    AggregateNuisances,
    FitSettings,
    LossModel,
    derive_seed,
    loss_pairs,
    split_domains,
    subset_key,
    train_eval,
)

DEN_TOL = 1e-8
PAIR_BUDGET = 250_000
EDGE_WARN = 0.01


@dataclass(frozen=True, eq=False)
class OutcomeBase:
    """Subset-independent models: source risk q, target outcome model, pi_110."""

    risk: RiskModel
    mu_1: LossModel
    pi_110: DensityRatioModel
    loss_fn: object

    def mu_0(self, X, pairs) -> np.ndarray:
        l0, l1 = pairs
        return l0 + (l1 - l0) * self.risk.q(X)


@dataclass(frozen=True, eq=False)
class OutcomeShiftNuisances:
    """``p_s``: target P(Y=1 | w, z_s, q_bin); ``phantom``: ratio
    p1(z_{-s} | w, z_s) / p1(z_{-s}) learned on original vs permuted rows."""

    subset: tuple[int, ...]
    kind: str  # "full" | "partial"
    p_s: FittedLearner | None = None
    phantom: DensityRatioModel | None = None

    def labels(self) -> dict[str, str]:
        if self.kind != "partial":
            return {}
        return {"p_s": self.p_s.label, "phantom": self.phantom.classifier.label}


def _rest(m2: int, s: Sequence[int]) -> list[int]:
    return [j for j in range(m2) if j not in set(s)]


def shifted_features(w, z, s, qbin) -> np.ndarray:
    return np.hstack([w, z[:, list(s)], qbin[:, None]])


def phantom_features(w, z, s, rest, qbin) -> np.ndarray:
    return np.hstack([w, z[:, list(s)], z[:, rest], qbin[:, None]])


def fit_outcome_base(dataset: Dataset, plan: SplitPlan, aggregate: AggregateNuisances,
                     settings: FitSettings, loss_fn) -> OutcomeBase:
    if loss_fn is None:
        raise ConfigError("outcome-shift values need a loss function evaluable at unobserved rows")
    tr, _ = train_eval(dataset, plan)
    src, tgt = split_domains(tr)
    risk = aggregate.risk()
    if risk is None:
        risk = RiskModel(settings.fit("q", src.x, src.y, "classification"), settings.B)
    mu_1 = LossModel(settings.fit("mu_dot1", tgt.x, tgt.y, "classification"), "outcome")
    return OutcomeBase(risk, mu_1, aggregate.pi_110, loss_fn)


def fit_phantom_ratio(target_rows: Dataset, subset, risk: RiskModel,
                      candidates: Sequence[LearnerConfig], seed: int = 0, folds: int = 3,
                      clip: tuple[float, float] = DEFAULT_CLIP) -> DensityRatioModel:
    """Classify original target rows against copies whose Z_{-s} block is
    permuted across rows. Classes are equal-sized, so no prior correction."""
    s = tuple(sorted(int(j) for j in subset))
    rest = _rest(target_rows.m2, s)
    if not rest:
        raise ConfigError("the phantom ratio needs at least one variable outside the subset")
    key = subset_key(target_rows, s)
    rng = np.random.default_rng(derive_seed(seed, "permute", key))
    w, z = target_rows.w, target_rows.z
    zp = z.copy()
    zp[:, rest] = z[rng.permutation(z.shape[0])][:, rest]
    orig = phantom_features(w, z, s, rest, risk.q_bin(np.hstack([w, z])))
    perm = phantom_features(w, zp, s, rest, risk.q_bin(np.hstack([w, zp])))
    return fit_density_ratio(orig, perm, candidates, folds, derive_seed(seed, "phantom", key), clip)


def fit_outcome_nuisances(subset, dataset: Dataset, plan: SplitPlan, base: OutcomeBase,
                          settings: FitSettings) -> OutcomeShiftNuisances:
    s = tuple(sorted(int(j) for j in subset))
    if len(s) == dataset.m2:
        return OutcomeShiftNuisances(s, "full")
    tr, _ = train_eval(dataset, plan)
    _, tgt = split_domains(tr)
    qbin = base.risk.q_bin(tgt.x)
    p_s = settings.fit(("p_s", subset_key(dataset, s)), shifted_features(tgt.w, tgt.z, s, qbin),
                       tgt.y, "classification")
    phantom = fit_phantom_ratio(tgt, s, base.risk, settings.candidates, settings.seed,
                                settings.folds, settings.clip)
    return OutcomeShiftNuisances(s, "partial", p_s, phantom)


def _partner_rows(rows: np.ndarray, n: int, k: int, exact: bool, rng) -> np.ndarray:
    if exact:
        return np.broadcast_to(np.arange(n), (rows.size, n))
    keys = rng.random((rows.size, n))
    return np.argpartition(keys, k - 1, axis=1)[:, :k]


def phantom_inner(ev_t: Dataset, nuis: OutcomeShiftNuisances, base: OutcomeBase,
                  inner_subsample: int, seed: int) -> np.ndarray:
    """Inner average over partners j of pi_ij * xi_ij * (loss_ij - mu_s,ij), where
    pair (i, j) is the phantom point (w_i, z_s,i, z_{-s},j) with outcome y_i.

    The phantom weight is the permutation ratio restricted to partners whose
    binned risk matches row i's, normalised to average one over partners.
    """
    s = nuis.subset
    rest = _rest(ev_t.m2, s)
    n = ev_t.n
    exact = n <= inner_subsample
    k = n if exact else int(inner_subsample)
    rng = np.random.default_rng(derive_seed(seed, "partners", subset_key(ev_t, s)))
    Q = base.risk.q_bin(ev_t.x)
    chunk = max(1, PAIR_BUDGET // k)
    out = np.empty(n)
    for a in range(0, n, chunk):
        rows = np.arange(a, min(a + chunk, n))
        J = _partner_rows(rows, n, k, exact, rng).ravel()
        I = np.repeat(rows, k)
        z = ev_t.z[I].copy()
        z[:, rest] = ev_t.z[J][:, rest]
        w = ev_t.w[I]
        qb = base.risk.q_bin(np.hstack([w, z]))
        keep = qb == Q[I]
        I, w, z, qb = I[keep], w[keep], z[keep], qb[keep]
        lonely = np.setdiff1d(rows, I)
        if lonely.size:
            I = np.concatenate([I, lonely])
            w = np.vstack([w, ev_t.w[lonely]])
            z = np.vstack([z, ev_t.z[lonely]])
            qb = np.concatenate([qb, Q[lonely]])
        x = np.hstack([w, z])
        l0, l1 = base.loss_fn.pairs(w, z)
        r = nuis.phantom.ratio(phantom_features(w, z, s, rest, qb))
        mu1 = base.mu_1.predict(x, (l0, l1))
        mus = l0 + (l1 - l0) * nuis.p_s.predict(shifted_features(w, z, s, qb))
        ell = np.where(ev_t.y[I] == 1, l1, l0)
        local = I - a
        top = np.bincount(local, r * (mu1 - mus) * (ell - mus), rows.size)
        bottom = np.bincount(local, r, rows.size)
        out[rows] = top / bottom
    return out


def outcome_rows(ev: Dataset, base: OutcomeBase, nuis: OutcomeShiftNuisances,
                 inner_subsample: int = 2000, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Pooled per-row numerator and denominator terms over the evaluation rows."""
    w0, w1 = domain_weights(ev.domain)
    pairs = loss_pairs(ev, base.loss_fn)
    mu1 = base.mu_1.predict(ev.x, pairs)
    mu0 = base.mu_0(ev.x, pairs)
    gap = mu1 - mu0
    den = (gap ** 2 + 2 * gap * (ev.loss - mu1)) * w1 - 2 * gap * (ev.loss - mu0) * base.pi_110.ratio(ev.x) * w0
    num = np.zeros(ev.n)
    if nuis.kind == "full":
        return num, den
    t = np.flatnonzero(ev.domain == 1)
    ev_t = ev.take(t)
    l0, l1 = pairs[0][t], pairs[1][t]
    qbin = base.risk.q_bin(ev_t.x)
    mus = l0 + (l1 - l0) * nuis.p_s.predict(shifted_features(ev_t.w, ev_t.z, nuis.subset, qbin))
    xi = mu1[t] - mus
    inner = phantom_inner(ev_t, nuis, base, inner_subsample, seed)
    num[t] = (xi ** 2 + 2 * xi * (ev_t.loss - mu1[t]) - 2 * inner) * w1[t]
    return num, den


def value_conditional_outcome(subset, dataset: Dataset, plan: SplitPlan, base: OutcomeBase,
                              nuisances: OutcomeShiftNuisances, alpha: float = 0.1,
                              inner_subsample: int = 2000, seed: int = 0) -> SubsetValue:
    """Estimate v_{Y,bin}(s) = 1 - num(s)/den with a delta-method CI.

    The denominator must be significantly positive at level ``alpha``;
    otherwise there is no outcome-shift variation to explain and
    DegenerateEstimateError is raised.
    """
    s = tuple(sorted(int(j) for j in subset))
    if s != nuisances.subset:
        raise ValueError(f"nuisances were fit for subset {nuisances.subset}, not {s}")
    _, ev = train_eval(dataset, plan)
    num, den = outcome_rows(ev, base, nuisances, inner_subsample, seed)
    check_denominator(den, ev, alpha)
    tol = DEN_TOL * float(np.mean(ev.loss ** 2))
    value = ratio_value(s, num, den, ev.domain, alpha, tol)
    q = base.risk.q(ev.x)
    edge = bin_edge_fraction(q, base.risk.B)
    if edge > EDGE_WARN:
        value = replace(value, warnings=value.warnings + (f"bin_edge_fraction:{edge:.4f}",))
    return value


def outcome_terms(subset, dataset: Dataset, plan: SplitPlan, base: OutcomeBase,
                  nuisances: OutcomeShiftNuisances, alpha: float = 0.1, inner_subsample: int = 2000,
                  seed: int = 0) -> tuple[EstimateWithCI, EstimateWithCI]:
    """One-step estimates of num(s) = E_1[(mu_1 - mu_s)^2] and den = E_1[(mu_1 - mu_0)^2]."""
    _, ev = train_eval(dataset, plan)
    num, den = outcome_rows(ev, base, nuisances, inner_subsample, seed)
    return (EstimateWithCI.from_influence(float(num.mean()), center_by_domain(num, ev.domain), alpha),
            EstimateWithCI.from_influence(float(den.mean()), center_by_domain(den, ev.domain), alpha))


def check_denominator(den_rows: np.ndarray, ev: Dataset, alpha: float) -> None:
    den = float(den_rows.mean())
    se = float(np.std(center_by_domain(den_rows, ev.domain), ddof=1) / np.sqrt(ev.n))
    if den <= norm.ppf(1 - alpha / 2) * se:
        raise DegenerateEstimateError(
            f"outcome-shift denominator {den:.3g} is not distinguishable from zero "
            f"(se {se:.3g}): no outcome-shift variation to explain")
