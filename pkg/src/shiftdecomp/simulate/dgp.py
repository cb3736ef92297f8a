"""Synthetic two-domain data generators with known outcome models."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import expit

from ..data import Dataset, ZeroOneLoss
from ..errors import ConfigError

KINDS = ("gaussian_logistic", "uniform_logistic", "covariate_mixture")


@dataclass(frozen=True)
class LinearThreshold:
    """Label predictor 1{coef . (w, z) + intercept > 0}."""

    coef: tuple[float, ...]
    intercept: float = 0.0

    def __call__(self, w: np.ndarray, z: np.ndarray) -> np.ndarray:
        x = np.hstack([w, z])
        return (x @ np.asarray(self.coef) + self.intercept > 0).astype(np.int8)


@dataclass(frozen=True)
class DGPSpec:
    """Source (domain 0) and target (domain 1) generating process.

    ``coef`` vectors act on (W, Z) without intercept. ``mean`` vectors are the
    feature means for the Gaussian kind and the Z1 mean for the mixture kind.
    ``m1`` leading columns are W. ``n`` rows are drawn per domain.
    """

    kind: str
    source_coef: tuple[float, ...]
    target_coef: tuple[float, ...]
    source_mean: tuple[float, ...] = ()
    target_mean: tuple[float, ...] = ()
    m1: int = 1
    n: int = 5000
    seed: int = 0
    mixture_gap: float = 3.0
    mixture_sd: float = 1.0
    predictor_coef: tuple[float, ...] | None = field(default=None)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown DGP kind {self.kind!r}; expected one of {KINDS}")
        p = len(self.source_coef)
        if len(self.target_coef) != p:
            raise ConfigError("source and target coefficient vectors differ in length")
        if self.kind == "gaussian_logistic" and not (len(self.source_mean) == len(self.target_mean) == p):
            raise ConfigError("gaussian_logistic needs one mean per feature in each domain")
        if self.kind == "covariate_mixture" and p != 3:
            raise ConfigError("covariate_mixture has features (W, Z1, Z2)")
        if self.n < 1:
            raise ConfigError("n must be at least 1")
        if not 0 <= self.m1 < p:
            raise ConfigError("m1 must leave at least one Z column")

    @property
    def p(self) -> int:
        return len(self.source_coef)

    @property
    def m2(self) -> int:
        return self.p - self.m1

    def with_(self, **kw) -> "DGPSpec":
        return replace(self, **kw)

    def predictor(self) -> LinearThreshold:
        """Fixed label rule; defaults to the source Bayes classifier."""
        return LinearThreshold(tuple(self.predictor_coef or self.source_coef))

    def loss_function(self) -> ZeroOneLoss:
        return ZeroOneLoss(self.predictor())

    def coef(self, d: int) -> np.ndarray:
        return np.asarray(self.target_coef if d else self.source_coef, dtype=float)

    def risk(self, d: int, x: np.ndarray) -> np.ndarray:
        """P_d(Y=1 | x)."""
        return expit(x @ self.coef(d))

    def sample_x(self, d: int, n: int, rng: np.random.Generator) -> np.ndarray:
        if self.kind == "gaussian_logistic":
            mean = np.asarray(self.target_mean if d else self.source_mean, dtype=float)
            return rng.standard_normal((n, self.p)) + mean
        if self.kind == "uniform_logistic":
            return rng.uniform(-1.0, 1.0, (n, self.p))
        means = self.target_mean if d else self.source_mean
        mu = means[0] if means else 0.0
        w = rng.standard_normal(n)
        z1 = rng.standard_normal(n) + mu
        side = np.where(rng.random(n) < 0.5, -0.5, 0.5) * self.mixture_gap
        z2 = z1 + side + self.mixture_sd * rng.standard_normal(n)
        return np.column_stack([w, z1, z2])


def gaussian_logistic(n: int = 5000, seed: int = 0, **kw) -> DGPSpec:
    """Independent unit normals; only the Z means and outcome coefficients shift."""
    return DGPSpec("gaussian_logistic", (0.3, 1.0, 0.5, 1.0), (0.3, 0.1, 0.5, 1.4),
                   (0.0, 2.0, 0.7, 3.0), (0.0, 0.0, 0.0, 0.0), 1, n, seed, **kw)


def uniform_logistic(n: int = 5000, seed: int = 0, **kw) -> DGPSpec:
    """Uniform[-1, 1) features; only the outcome model shifts."""
    return DGPSpec("uniform_logistic", (0.2, 0.4, 2.0, 0.25, 0.1, 0.1),
                   (0.2, -0.4, 0.8, 0.1, 0.1, 0.1), (), (), 1, n, seed, **kw)


def covariate_mixture(n: int = 5000, seed: int = 0, **kw) -> DGPSpec:
    """Z2 is a two-component mixture centred on Z1; only the Z1 mean shifts and
    the outcome model is shared, so the Z1-partial shift explains everything."""
    kw.setdefault("source_mean", (0.0,))
    kw.setdefault("target_mean", (1.5,))
    return DGPSpec("covariate_mixture", (0.5, 1.0, 0.5), (0.5, 1.0, 0.5), m1=1, n=n, seed=seed, **kw)


BUILDERS = {"gaussian_logistic": gaussian_logistic, "uniform_logistic": uniform_logistic,
            "covariate_mixture": covariate_mixture}


def sample_domain(spec: DGPSpec, d: int, n: int, rng: np.random.Generator):
    x = spec.sample_x(d, n, rng)
    y = (rng.random(n) < spec.risk(d, x)).astype(np.int8)
    return x, y


def generate(spec: DGPSpec, predictor=None) -> Dataset:
    """Draw ``spec.n`` rows per domain; loss is the 0-1 loss of ``predictor``
    (default: the source Bayes classifier)."""
    predictor = predictor or spec.predictor()
    parts = []
    for d in (0, 1):
        rng = np.random.default_rng(np.random.SeedSequence([int(spec.seed), d]))
        x, y = sample_domain(spec, d, spec.n, rng)
        parts.append((x, y, np.full(spec.n, d)))
    x = np.vstack([p[0] for p in parts])
    y = np.concatenate([p[1] for p in parts])
    dom = np.concatenate([p[2] for p in parts])
    w, z = x[:, :spec.m1], x[:, spec.m1:]
    pred = np.asarray(predictor(w, z)).astype(np.int8)
    loss = (pred != y).astype(float)
    return Dataset(w, z, y, dom, loss, pred=pred)
