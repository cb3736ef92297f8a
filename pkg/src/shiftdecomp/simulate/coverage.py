"""Repeated-sampling coverage of the decomposition confidence intervals."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from ..aggregate import TERMS, estimate_aggregate, estimate_aggregate_plugin
from ..covariate import fit_covariate_base, fit_covariate_nuisances, value_conditional_covariate
from ..data import split
from ..errors import ConfigError, DegenerateEstimateError
from ..learners import fast_candidates
from ..nuisance import FitSettings, derive_seed, fit_aggregate_nuisances
from ..outcome import fit_outcome_base, fit_outcome_nuisances, value_conditional_outcome
from . import oracle
from .dgp import DGPSpec, generate

MIN_REPS = 10


def parse_target(name: str) -> tuple[str, tuple[int, ...]]:
    """``lambda_W`` style aggregate names, or ``vz:{1,2}`` / ``vy:{3}`` with
    1-based Z indices."""
    if name in TERMS or name == "total":
        return "aggregate", ()
    kind, _, body = name.partition(":")
    if kind not in ("vz", "vy") or not (body.startswith("{") and body.endswith("}")):
        raise ConfigError(f"unknown coverage target {name!r}")
    inner = body[1:-1].strip()
    try:
        s = tuple(sorted(int(t) - 1 for t in inner.split(",") if t.strip()))
    except ValueError:
        raise ConfigError(f"bad subset in target {name!r}") from None
    if any(j < 0 for j in s):
        raise ConfigError(f"Z indices are 1-based in target {name!r}")
    return kind, s


def _cache_dir() -> Path:
    return Path(os.environ.get("SHIFTDECOMP_CACHE", Path.home() / ".cache" / "shiftdecomp"))


def _cached(key: dict, compute) -> dict[str, float]:
    digest = hashlib.sha256(json.dumps(key, sort_keys=True).encode()).hexdigest()[:20]
    path = _cache_dir() / f"oracle-{digest}.json"
    if path.exists():
        try:
            return json.loads(path.read_text())
        except (OSError, ValueError):
            pass
    value = {k: float(v) for k, v in compute().items()}
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(value, sort_keys=True))
    except OSError:
        pass
    return value


def oracle_truths(spec: DGPSpec, targets: Sequence[str], B: int = 20,
                  draws: int = 10_000_000) -> dict[str, float]:
    """Ground truth for each target, cached on disk.

    Aggregate terms use Monte Carlo for any generator; subset values need the
    gaussian_logistic quadrature oracles.
    """
    spec_key = asdict(spec.with_(n=1, seed=0))
    out: dict[str, float] = {}
    agg = [t for t in targets if parse_target(t)[0] == "aggregate"]
    if agg:
        truth = _cached({"what": "aggregate", "spec": spec_key, "draws": draws},
                        lambda: oracle.aggregate_truth_mc(spec, draws))
        truth["total"] = sum(truth[t] for t in TERMS)
        out.update({t: truth[t] for t in agg})
    for t in targets:
        kind, s = parse_target(t)
        if kind == "vz":
            out[t] = _cached({"what": "vz", "spec": spec_key, "s": s},
                             lambda: oracle.covariate_value_truth(spec, s))["value"]
        elif kind == "vy":
            out[t] = _cached({"what": "vy", "spec": spec_key, "s": s, "B": B},
                             lambda: oracle.outcome_value_truth(spec, s, B))["value"]
    return out


@dataclass(frozen=True)
class CoverageRow:
    target: str
    estimator: str
    n: int
    reps: int
    truth: float
    coverage: float
    mean_width: float
    mean_estimate: float
    failures: int = 0


@dataclass(frozen=True)
class CoverageTable:
    rows: tuple[CoverageRow, ...]
    alpha: float
    seed: int
    estimates: dict = field(default_factory=dict, repr=False, compare=False)

    def __getitem__(self, target: str) -> CoverageRow:
        for r in self.rows:
            if r.target == target:
                return r
        raise KeyError(target)

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "seed": self.seed, "rows": [asdict(r) for r in self.rows]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        names = list(CoverageRow.__dataclass_fields__)
        w = csv.DictWriter(buf, fieldnames=names, lineterminator="\n")
        w.writeheader()
        for r in self.rows:
            w.writerow(asdict(r))
        return buf.getvalue()


@dataclass(frozen=True)
class _Job:
    spec: DGPSpec
    estimator: str
    targets: tuple[str, ...]
    alpha: float
    settings: FitSettings
    train_fraction: float
    inner_subsample: int
    rep_seed: int


def run_replication(job: _Job) -> dict[str, tuple[float, float, float] | None]:
    """Estimates (point, lo, hi) for every target on one simulated dataset;
    None where the estimate was degenerate."""
    spec = job.spec.with_(seed=job.rep_seed)
    ds = generate(spec)
    plan = split(ds, job.train_fraction, job.rep_seed)
    settings = FitSettings(job.settings.candidates, job.settings.folds, job.rep_seed,
                           job.settings.clip, job.settings.B)
    nuis = fit_aggregate_nuisances(ds, plan, settings)
    parsed = {t: parse_target(t) for t in job.targets}
    out: dict[str, tuple[float, float, float] | None] = {}
    if any(k == "aggregate" for k, _ in parsed.values()):
        fn = estimate_aggregate if job.estimator == "debiased" else estimate_aggregate_plugin
        res = fn(ds, plan, nuis, job.alpha)
        for t, (k, _) in parsed.items():
            if k == "aggregate":
                e = res[t]
                out[t] = (e.point, e.ci_lo, e.ci_hi)
    cov_base = out_base = None
    for t, (k, s) in parsed.items():
        if k == "aggregate":
            continue
        try:
            if k == "vz":
                cov_base = cov_base or fit_covariate_base(ds, plan, nuis, settings)
                cn = fit_covariate_nuisances(s, ds, plan, settings)
                v = value_conditional_covariate(s, ds, plan, cov_base, cn, job.alpha)
            else:
                out_base = out_base or fit_outcome_base(ds, plan, nuis, settings, spec.loss_function())
                on = fit_outcome_nuisances(s, ds, plan, out_base, settings)
                v = value_conditional_outcome(s, ds, plan, out_base, on, job.alpha,
                                              job.inner_subsample, job.rep_seed)
            out[t] = (v.value.point, v.value.ci_lo, v.value.ci_hi)
        except DegenerateEstimateError:
            out[t] = None
    return out


def _check_targets(spec: DGPSpec, estimator: str, targets: Sequence[str]) -> tuple[str, ...]:
    if estimator not in ("debiased", "plugin"):
        raise ConfigError(f"estimator must be 'debiased' or 'plugin', not {estimator!r}")
    targets = tuple(targets)
    if not targets:
        raise ConfigError("no coverage targets given")
    parsed = [parse_target(t) for t in targets]
    if estimator == "plugin" and any(k != "aggregate" for k, _ in parsed):
        raise ConfigError("the plug-in comparison arm covers aggregate targets only")
    for k, s in parsed:
        if k != "aggregate" and (not s or max(s) >= spec.m2):
            raise ConfigError(f"subset {tuple(j + 1 for j in s)} is not a non-empty subset of Z1..Z{spec.m2}")
    return targets


def simulate_estimates(spec: DGPSpec, estimator: str = "debiased", targets: Sequence[str] = TERMS,
                       reps: int = 200, n: int | None = None, alpha: float = 0.1, seed: int = 0,
                       settings: FitSettings | None = None, train_fraction: float = 0.8,
                       inner_subsample: int = 2000, n_jobs: int = 1) -> list[dict]:
    """Per-replication ``{target: (point, lo, hi) or None}`` on fresh datasets.

    Replication ``r`` uses seed ``derive_seed(seed, "rep", r)``, so results do
    not depend on ``n_jobs``.
    """
    targets = _check_targets(spec, estimator, targets)
    if n is not None:
        spec = spec.with_(n=n)
    settings = settings or FitSettings(candidates=tuple(fast_candidates()))
    jobs = [_Job(spec, estimator, targets, alpha, settings, train_fraction, inner_subsample,
                 derive_seed(seed, "rep", r)) for r in range(reps)]
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            return list(pool.map(run_replication, jobs))
    return [run_replication(j) for j in jobs]


def coverage_experiment(spec: DGPSpec, estimator: str = "debiased", targets: Sequence[str] = TERMS,
                        reps: int = 200, n: int | None = None, alpha: float = 0.1, seed: int = 0,
                        truths: dict[str, float] | str | None = None, settings: FitSettings | None = None,
                        train_fraction: float = 0.8, inner_subsample: int = 2000,
                        n_jobs: int = 1) -> CoverageTable:
    """Fraction of replications whose CI contains the truth, per target.

    ``truths`` may be a mapping, None (built-in oracles) or ``"empirical"``
    (each target's mean estimate over the replications, a check that the
    intervals are wide enough for the estimator's own spread). Degenerate
    replications are left out of ``coverage`` and counted in ``failures``.
    """
    if reps < MIN_REPS:
        raise ConfigError(f"coverage needs at least {MIN_REPS} replications, got {reps}")
    targets = _check_targets(spec, estimator, targets)
    settings = settings or FitSettings(candidates=tuple(fast_candidates()))
    results = simulate_estimates(spec, estimator, targets, reps, n, alpha, seed, settings,
                                 train_fraction, inner_subsample, n_jobs)
    if n is not None:
        spec = spec.with_(n=n)
    if truths is None:
        truths = oracle_truths(spec, targets, settings.B)
    rows, estimates = [], {}
    for t in targets:
        got = np.array([r[t] for r in results if r[t] is not None], dtype=float).reshape(-1, 3)
        estimates[t] = got
        truth = float(got[:, 0].mean()) if truths == "empirical" else float(truths[t])
        hit = (got[:, 1] <= truth) & (truth <= got[:, 2])
        rows.append(CoverageRow(
            t, estimator, spec.n, reps, truth,
            float(hit.mean()) if got.size else float("nan"),
            float((got[:, 2] - got[:, 1]).mean()) if got.size else float("nan"),
            float(got[:, 0].mean()) if got.size else float("nan"),
            reps - got.shape[0]))
    return CoverageTable(tuple(rows), alpha, seed, estimates)
