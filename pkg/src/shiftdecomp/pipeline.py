"""End-to-end run: split, nuisances, aggregate terms, subset values, Shapley."""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from . import __version__
from .aggregate import TERMS, estimate_aggregate, estimate_aggregate_crossfit
from .covariate import fit_covariate_base, fit_covariate_nuisances, value_conditional_covariate
from .data import Dataset, SplitPlan, read_csv, split
from .errors import ConfigError, DataError, ShiftDecompError
from .learners import LearnerConfig, default_candidates, fast_candidates
from .nuisance import AggregateNuisances, FitSettings, derive_seed, fit_aggregate_nuisances, train_eval
from .outcome import fit_outcome_base, fit_outcome_nuisances, value_conditional_outcome
from .report import DecompositionReport
from .shapley import sample_subsets, solve_shapley

TARGETS = ("aggregate", "detailed_covariate", "detailed_outcome")
CLAMP_WARN = 0.05


class ColumnRoles(BaseModel):
    model_config = ConfigDict(extra="forbid")

    w_cols: list[str] = Field(default_factory=list)
    z_cols: list[str] = Field(min_length=1)
    y_col: str
    domain_col: str = "domain"
    loss_col: str | None = None
    pred_col: str | None = None
    threshold: float | None = Field(default=None, gt=0.0, lt=1.0)

    @model_validator(mode="after")
    def _roles(self):
        if (self.loss_col is None) == (self.pred_col is None):
            raise ValueError("give exactly one of loss_col or pred_col")
        if self.threshold is not None and self.pred_col is None:
            raise ValueError("threshold applies to pred_col scores only")
        cols = self.w_cols + self.z_cols + [self.y_col, self.loss_col or self.pred_col]
        dup = sorted({c for c in cols if cols.count(c) > 1})
        if dup:
            raise ValueError(f"column(s) assigned more than one role: {', '.join(dup)}")
        return self


class LearnerSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["logistic_poly", "ridge_linear", "gbt"]
    degree: int = Field(default=1, ge=1, le=5)
    ridge: float = Field(default=0.1, ge=0.0)
    n_trees: int = Field(default=100, ge=1)
    depth: int = Field(default=2, ge=1, le=8)
    learning_rate: float = Field(default=0.1, gt=0.0, le=1.0)

    def config(self) -> LearnerConfig:
        return LearnerConfig(**self.model_dump())


class RunConfig(BaseModel):
    """Everything that determines a run; identical configs give identical reports."""

    model_config = ConfigDict(extra="forbid")

    data: str | None = None
    source: str | None = None
    target: str | None = None
    columns: ColumnRoles
    targets: list[Literal["aggregate", "detailed_covariate", "detailed_outcome"]] = Field(
        default_factory=lambda: ["aggregate"], min_length=1)
    alpha: float = Field(default=0.1, gt=0.0, lt=1.0)
    B: int = Field(default=20, ge=1, le=10_000)
    gamma: float = Field(default=1.0, gt=0.0)
    train_fraction: float = Field(default=0.8, gt=0.0, lt=1.0)
    folds: int = Field(default=3, ge=2, le=20)
    crossfit_folds: int | None = Field(default=None, ge=2, le=20)
    inner_subsample: int = Field(default=2000, ge=1)
    clamp: tuple[float, float] = (0.01, 0.99)
    seed: int = Field(default=0, ge=0)
    learners: Literal["default", "fast"] | list[LearnerSpec] = "default"
    threads: int = Field(default=1, ge=1, le=256)
    report: str | None = None
    svg: str | None = None

    @field_validator("clamp")
    @classmethod
    def _clamp(cls, v):
        lo, hi = v
        if not 0.0 < lo < hi < 1.0:
            raise ValueError("clamp must satisfy 0 < lo < hi < 1")
        return v

    @field_validator("targets")
    @classmethod
    def _targets(cls, v):
        return sorted(set(v), key=TARGETS.index)

    @model_validator(mode="after")
    def _inputs(self):
        if self.data is not None and (self.source or self.target):
            raise ValueError("give either data or source+target, not both")
        if (self.source is None) != (self.target is None):
            raise ValueError("source and target must be given together")
        return self

    @classmethod
    def load(cls, path: str | Path, **overrides) -> "RunConfig":
        try:
            raw = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        raw.update({k: v for k, v in overrides.items() if v is not None})
        return cls.parse(raw)

    @classmethod
    def parse(cls, raw: dict) -> "RunConfig":
        try:
            return cls.model_validate(raw)
        except ValidationError as exc:
            msgs = "; ".join(f"{'.'.join(map(str, e['loc'])) or 'config'}: {e['msg']}" for e in exc.errors())
            raise ConfigError(f"invalid config: {msgs}") from None

    def candidates(self) -> tuple[LearnerConfig, ...]:
        if self.learners == "default":
            return tuple(default_candidates())
        if self.learners == "fast":
            return tuple(fast_candidates())
        return tuple(s.config() for s in self.learners)

    def settings(self) -> FitSettings:
        return FitSettings(self.candidates(), self.folds, self.seed, tuple(self.clamp), self.B)


def load_dataset(config: RunConfig, stdin=None) -> Dataset:
    """Read the configured CSV input(s); ``data == "-"`` reads from ``stdin``."""
    roles = config.columns.model_dump()
    domain_col = roles.pop("domain_col")
    if config.data is None and config.source is None:
        raise ConfigError("no input: set data, or source and target")
    src = stdin if config.data == "-" else config.data
    try:
        if config.data is not None:
            return read_csv(src, domain_col=domain_col, **roles)
        return read_csv(config.source, config.target, domain_col=domain_col, **roles)
    except DataError as exc:
        raise DataError(exc.message, stage="load",
                        hint="check the column map against the CSV header") from None


class LabelSurrogate:
    """Stand-in for a label predictor known only through its predictions:
    a classifier of the predicted label, thresholded at 1/2."""

    def __init__(self, learner):
        self.learner = learner

    def pairs(self, w, z):
        f = (self.learner.predict(np.hstack([w, z])) > 0.5).astype(float)
        return f, 1.0 - f


class LossSurrogate:
    """Regression of the loss on (w, z, y), evaluated at y = 0 and y = 1."""

    def __init__(self, learner):
        self.learner = learner

    def pairs(self, w, z):
        x = np.hstack([w, z])
        n = x.shape[0]
        return (self.learner.predict(np.hstack([x, np.zeros((n, 1))])),
                self.learner.predict(np.hstack([x, np.ones((n, 1))])))


def fit_surrogate_loss(dataset: Dataset, plan: SplitPlan, settings: FitSettings):
    """Loss function evaluable at feature combinations that were never observed."""
    tr, _ = train_eval(dataset, plan)
    if tr.pred is not None:
        return LabelSurrogate(settings.fit("surrogate_pred", tr.x, tr.pred, "classification")), "label"
    xy = np.hstack([tr.x, tr.y[:, None].astype(float)])
    return LossSurrogate(settings.fit("surrogate_loss", xy, tr.loss)), "loss"


def _clamp_diagnostics(ev: Dataset, nuis: AggregateNuisances) -> tuple[dict, list[str]]:
    src = ev.domain == 0
    fractions = {
        "pi_100": nuis.pi_100.clipped_fraction(ev.w[src]),
        "pi_110": nuis.pi_110.clipped_fraction(ev.x[src]),
    }
    warns = [f"clamped_ratio:{k}:{v:.4f}" for k, v in sorted(fractions.items()) if v > CLAMP_WARN]
    return fractions, warns


def _error_record(stage: str, exc: Exception) -> dict:
    code = getattr(exc, "exit_code", 5)
    msg = exc.message if isinstance(exc, ShiftDecompError) else f"{type(exc).__name__}: {exc}"
    hints = {
        2: "fix the configuration",
        3: "check the input data for the reported problem",
        4: "the estimand is undefined or not identifiable on these data; "
           "try more data or drop this target",
        5: "internal error; please report it with the config",
    }
    return {"stage": stage, "message": msg, "exit_code": code,
            "hint": getattr(exc, "hint", None) or hints.get(code, hints[5])}


def _detailed(section: str, dataset: Dataset, plan: SplitPlan, nuis: AggregateNuisances,
              settings: FitSettings, config: RunConfig, loss_fn):
    _, ev = train_eval(dataset, plan)
    subsets = sample_subsets(dataset.m2, config.gamma, ev.n, derive_seed(config.seed, "subsets", section))
    if section == "covariate":
        base = fit_covariate_base(dataset, plan, nuis, settings)
        base_labels = {"mu_10": base.mu_10.label}

        def one(s):
            cn = fit_covariate_nuisances(s, dataset, plan, settings)
            return value_conditional_covariate(s, dataset, plan, base, cn, config.alpha), cn.labels()
    else:
        base = fit_outcome_base(dataset, plan, nuis, settings, loss_fn)
        base_labels = {"q": base.risk.learner.label, "mu_dot1": base.mu_1.label}
        inner_seed = derive_seed(config.seed, "inner")

        def one(s):
            on = fit_outcome_nuisances(s, dataset, plan, base, settings)
            return (value_conditional_outcome(s, dataset, plan, base, on, config.alpha,
                                              config.inner_subsample, inner_seed), on.labels())

    # results are collected in subset order, whatever order the workers finish in
    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            results = list(pool.map(one, subsets.subsets))
    else:
        results = [one(s) for s in subsets.subsets]
    values = [v for v, _ in results]
    attribution = solve_shapley(values, subsets, config.alpha, section, dataset.z_names)
    rows = []
    for v, labels in results:
        d = v.to_dict()
        d["subset_names"] = [dataset.z_names[j] for j in v.subset]
        d["learners"] = labels
        rows.append(d)
    out = attribution.to_dict()
    out["n_draws"] = subsets.n_draws
    out["base_learners"] = base_labels
    return out, rows


def run(config: RunConfig, dataset: Dataset | None = None, loss_fn=None, stdin=None) -> DecompositionReport:
    """Execute the configured decomposition.

    ``loss_fn`` (an object with ``pairs(w, z)``) gives losses at unobserved
    feature combinations for the outcome-shift values; without it a surrogate
    is learned from the data and flagged in the report warnings.
    Detailed-stage failures leave that section None and are recorded in
    ``report.errors``; earlier failures raise.
    """
    if dataset is None:
        dataset = load_dataset(config, stdin)
    dataset.require_both_domains()
    settings = config.settings()
    try:
        plan = split(dataset, config.train_fraction, derive_seed(config.seed, "split"))
        tr, ev = train_eval(dataset, plan)
    except DataError as exc:
        raise DataError(exc.message, stage="split", hint="each domain needs rows in both partitions") from None
    try:
        nuis = fit_aggregate_nuisances(dataset, plan, settings)
    except ShiftDecompError as exc:
        raise type(exc)(exc.message, stage="nuisance", hint="check for constant or degenerate columns") from None
    clamped, warnings = _clamp_diagnostics(ev, nuis)
    report = DecompositionReport()
    if "aggregate" in config.targets:
        if config.crossfit_folds:
            agg = estimate_aggregate_crossfit(dataset, settings, config.crossfit_folds, config.alpha,
                                              derive_seed(config.seed, "crossfit"))
        else:
            agg = estimate_aggregate(dataset, plan, nuis, config.alpha)
        report.aggregate = {k: agg[k].to_dict() for k in TERMS + ("total",)}
        report.aggregate["warnings"] = list(agg.warnings)
    surrogate = None
    if "detailed_outcome" in config.targets and loss_fn is None:
        loss_fn, surrogate = fit_surrogate_loss(dataset, plan, settings)
        warnings.append(f"surrogate_loss_function:{surrogate}")
    for section in ("covariate", "outcome"):
        if f"detailed_{section}" not in config.targets:
            continue
        try:
            report.detailed[section], report.subset_values[section] = _detailed(
                section, dataset, plan, nuis, settings, config, loss_fn)
        except Exception as exc:  # partial report: record and carry on
            report.detailed[section] = None
            report.errors[f"detailed_{section}"] = _error_record(f"detailed_{section}", exc)
    for section in ("covariate", "outcome"):
        for row in report.subset_values[section]:
            warnings.extend(f"{section}{tuple(row['subset'])}:{w}" for w in row["warnings"])
        if report.detailed[section]:
            warnings.extend(f"{section}:{w}" for w in report.detailed[section]["warnings"])
    src, tgt = dataset.domain == 0, dataset.domain == 1
    report.metadata = {
        "package_version": __version__,
        "n0": int(src.sum()), "n1": int(tgt.sum()),
        "n0_eval": int((ev.domain == 0).sum()), "n1_eval": int((ev.domain == 1).sum()),
        "w_names": list(dataset.w_names), "z_names": list(dataset.z_names),
        # execution-only fields stay out so reports hash-match across thread counts
        "config": config.model_dump(mode="json", exclude={"threads", "report", "svg"}),
        "learners": nuis.labels(),
        "clamped_fraction": clamped,
        "surrogate_loss": surrogate,
        "warnings": warnings,
    }
    return report
