"""Point estimates with influence-function confidence intervals."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.stats import norm

from .errors import DegenerateEstimateError


@dataclass(frozen=True)
class EstimateWithCI:
    point: float
    se: float
    ci_lo: float
    ci_hi: float
    alpha: float
    n_eval: int

    @classmethod
    def from_se(cls, point: float, se: float, alpha: float, n_eval: int) -> "EstimateWithCI":
        half = norm.ppf(1.0 - alpha / 2.0) * se
        return cls(float(point), float(se), float(point - half), float(point + half),
                   float(alpha), int(n_eval))

    @classmethod
    def from_influence(cls, point: float, influence: np.ndarray, alpha: float) -> "EstimateWithCI":
        """CI of ``point`` with variance var(influence) / n."""
        n = influence.shape[0]
        se = float(np.std(influence, ddof=1) / np.sqrt(n)) if n > 1 else 0.0
        return cls.from_se(point, se, alpha, n)

    @property
    def half_width(self) -> float:
        return 0.5 * (self.ci_hi - self.ci_lo)

    def covers(self, value: float) -> bool:
        return self.ci_lo <= value <= self.ci_hi

    def to_dict(self, name: str | None = None) -> dict:
        d = asdict(self)
        if name is not None:
            d = {"name": name, **d}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "EstimateWithCI":
        return cls(*(d[k] for k in ("point", "se", "ci_lo", "ci_hi", "alpha", "n_eval")))


def domain_weights(domain: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Indicator weights 1{d=0}/p(d=0) and 1{d=1}/p(d=1) with empirical proportions."""
    d1 = domain == 1
    p1 = d1.mean()
    return (~d1) / (1.0 - p1), d1 / p1


def center_by_domain(rows: np.ndarray, domain: np.ndarray) -> np.ndarray:
    """Influence values of mean(rows) when per-domain sample sizes are fixed.

    Rows carry 1{d}/p(d) weights with empirical p(d), so the estimate is a sum
    of per-domain means and each row is centred on its own domain's mean.
    """
    psi = np.array(rows, dtype=float)
    for d in (0, 1):
        m = domain == d
        if m.any():
            psi[m] -= psi[m].mean()
    return psi


@dataclass(frozen=True, eq=False)
class SubsetValue:
    """Estimated value of one variable subset, reported as 1 - num/den."""

    subset: tuple[int, ...]
    value: EstimateWithCI
    influence: np.ndarray
    num: float
    den: float
    num_se: float = 0.0
    den_se: float = 0.0
    warnings: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {"subset": list(self.subset), "num": self.num, "den": self.den,
                "num_se": self.num_se, "den_se": self.den_se, "warnings": list(self.warnings),
                **self.value.to_dict()}


def ratio_value(subset, num_rows: np.ndarray, den_rows: np.ndarray, domain: np.ndarray,
                alpha: float, den_tol: float) -> SubsetValue:
    """Value 1 - num/den with a delta-method influence function."""
    num, den = float(num_rows.mean()), float(den_rows.mean())
    if not den > den_tol:
        raise DegenerateEstimateError(
            f"denominator {den:.3g} is below tolerance {den_tol:.3g}: no shift variation to explain")
    psi_num = center_by_domain(num_rows, domain)
    psi_den = center_by_domain(den_rows, domain)
    n = domain.shape[0]
    num_se = float(np.std(psi_num, ddof=1) / np.sqrt(n))
    den_se = float(np.std(psi_den, ddof=1) / np.sqrt(n))
    psi = -(psi_num / den - num * psi_den / den ** 2)
    point = 1.0 - num / den
    warnings = []
    if num < -3.0 * num_se:
        warnings.append("negative_numerator")
    return SubsetValue(tuple(subset), EstimateWithCI.from_influence(point, psi, alpha),
                       psi, num, den, num_se, den_se, tuple(warnings))
