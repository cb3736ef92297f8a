"""Source risk model q(w, z) = P_0(Y=1 | w, z) and its binning."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DataError
from .selection import FittedLearner


def bin_risk(q: np.ndarray, B: int = 20) -> np.ndarray:
    """Round risks to the nearest multiple of 1/B (ties round up)."""
    if int(B) != B or B < 2:
        raise DataError("bin count B must be an integer >= 2")
    q = np.asarray(q, dtype=float)
    if np.any(~np.isfinite(q)) or np.any((q < 0) | (q > 1)):
        raise DataError("risk values must lie in [0, 1]")
    return np.minimum(np.floor(q * B + 0.5), B) / B


def bin_edge_fraction(q: np.ndarray, B: int = 20, tol: float = 1e-12) -> float:
    """Share of risks within ``tol`` of a rounding boundary (k - 1/2)/B."""
    q = np.asarray(q, dtype=float)
    if q.size == 0:
        return 0.0
    scaled = q * B + 0.5
    return float(np.mean(np.abs(scaled - np.round(scaled)) <= tol * B))


@dataclass(frozen=True, eq=False)
class RiskModel:
    learner: FittedLearner
    B: int = 20

    def q(self, X: np.ndarray) -> np.ndarray:
        return np.clip(self.learner.predict(X), 0.0, 1.0)

    def q_bin(self, X: np.ndarray) -> np.ndarray:
        return bin_risk(self.q(X), self.B)
