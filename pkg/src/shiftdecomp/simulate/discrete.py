"""Binary (W, Z1, Z2, Y) generator whose estimands are computed by enumeration."""

from __future__ import annotations

from dataclasses import dataclass, replace
from itertools import product

import numpy as np

from ..data import Dataset, ZeroOneLoss
from ..learners import DensityRatioModel, FittedLearner, bin_risk
from ..nuisance import AggregateNuisances, FitSettings, LossModel

CELLS = np.array(list(product((0, 1), repeat=3)), dtype=float)  # rows (w, z1, z2)


def _cell(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x).astype(int)
    return x[:, 0] * 4 + x[:, 1] * 2 + x[:, 2]


@dataclass(frozen=True)
class CellTable:
    """Lookup model over the 8 (w, z1, z2) cells, or a marginal over leading columns."""

    values: tuple[float, ...]

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X).astype(int)
        k = X.shape[1]
        idx = (X * (1 << np.arange(k - 1, -1, -1))).sum(axis=1) if k else np.zeros(X.shape[0], int)
        return np.asarray(self.values)[idx]


def _table_learner(values, task) -> FittedLearner:
    return FittedLearner(CellTable(tuple(float(v) for v in np.ravel(values))), task, None, (), ("oracle",))


def _table_ratio(p_num, p_den) -> DensityRatioModel:
    p_num, p_den = np.ravel(p_num), np.ravel(p_den)
    prob = p_num / (p_num + p_den)
    return DensityRatioModel(_table_learner(prob, "classification"), 1.0, (1e-12, 1 - 1e-12))


@dataclass(frozen=True)
class DiscreteDGP:
    """Per-domain probability tables, indexed [domain, ...parents].

    ``p_w[d]`` = P(W=1); ``p_z1[d, w]``; ``p_z2[d, w, z1]``;
    ``p_y[d, w, z1, z2]``. The loss is the 0-1 loss of the source Bayes rule.
    """

    p_w: tuple = (0.4, 0.6)
    p_z1: tuple = ((0.45, 0.39), (0.82, 0.53))
    p_z2: tuple = (((0.31, 0.73), (0.27, 0.53)), ((0.42, 0.16), (0.63, 0.69)))
    p_y: tuple = ((((0.32, 0.75), (0.94, 0.65)), ((0.32, 0.19), (0.67, 0.06))),
                  (((0.39, 0.93), (0.79, 0.82)), ((0.08, 0.09), (0.5, 0.05))))
    n: int = 4000
    seed: int = 0
    B: int = 20

    def with_(self, **kw) -> "DiscreteDGP":
        return replace(self, **kw)

    def joint(self, d: int) -> np.ndarray:
        """P_d(w, z1, z2) as a (2, 2, 2) array."""
        pw = np.array([1 - self.p_w[d], self.p_w[d]])
        pz1 = np.array(self.p_z1[d])
        pz2 = np.array(self.p_z2[d])
        j = np.empty((2, 2, 2))
        for w, a, b in product((0, 1), repeat=3):
            j[w, a, b] = (pw[w] * (pz1[w] if a else 1 - pz1[w])
                          * (pz2[w, a] if b else 1 - pz2[w, a]))
        return j

    def risk(self, d: int) -> np.ndarray:
        return np.array(self.p_y[d], dtype=float)

    def predict_table(self) -> np.ndarray:
        return (self.risk(0) > 0.5).astype(float)

    def predictor(self, w: np.ndarray, z: np.ndarray) -> np.ndarray:
        x = np.hstack([w, z])
        return self.predict_table().ravel()[_cell(x)].astype(np.int8)

    def loss_function(self) -> ZeroOneLoss:
        return ZeroOneLoss(self.predictor)

    def mean_loss(self, d: int) -> np.ndarray:
        f = self.predict_table()
        return f + (1 - 2 * f) * self.risk(d)

    def generate(self) -> Dataset:
        parts = []
        for d in (0, 1):
            rng = np.random.default_rng(np.random.SeedSequence([int(self.seed), d, 7]))
            p = self.joint(d).ravel()
            cells = rng.choice(8, size=self.n, p=p)
            x = CELLS[cells]
            y = (rng.random(self.n) < self.risk(d).ravel()[cells]).astype(np.int8)
            parts.append((x, y, np.full(self.n, d)))
        x = np.vstack([p[0] for p in parts])
        y = np.concatenate([p[1] for p in parts])
        dom = np.concatenate([p[2] for p in parts])
        pred = self.predictor(x[:, :1], x[:, 1:])
        return Dataset(x[:, :1], x[:, 1:], y, dom, (pred != y).astype(float), pred=pred)

    # exact estimands

    def _mu_w(self, zdist: np.ndarray) -> np.ndarray:
        """sum_z zdist[w, z] * mu_0(w, z) for each w; zdist rows sum to 1."""
        return (zdist * self.mean_loss(0)).sum(axis=(1, 2))

    def _conditional_z(self, d: int) -> np.ndarray:
        j = self.joint(d)
        return j / j.sum(axis=(1, 2), keepdims=True)

    def _mixed_z(self, s: tuple[int, ...]) -> np.ndarray:
        """p_1(z_s | w) p_0(z_{-s} | w, z_s) over (w, z1, z2)."""
        c0, c1 = self._conditional_z(0), self._conditional_z(1)
        if s == ():
            return c0
        if s == (0, 1):
            return c1
        axis = 2 if s == (0,) else 1  # the shifted block keeps the other axis
        m1 = c1.sum(axis=axis, keepdims=True)
        m0 = c0.sum(axis=axis, keepdims=True)
        return m1 * c0 / m0

    def aggregate(self) -> dict[str, float]:
        j0, j1 = self.joint(0), self.joint(1)
        mu0, mu1 = self.mean_loss(0), self.mean_loss(1)
        pw1 = j1.sum(axis=(1, 2))
        e000 = (j0 * mu0).sum()
        e100 = (pw1 * self._mu_w(self._conditional_z(0))).sum()
        e110 = (j1 * mu0).sum()
        e111 = (j1 * mu1).sum()
        return {"lambda_W": e100 - e000, "lambda_Z": e110 - e100, "lambda_Y": e111 - e110,
                "total": e111 - e000}

    def covariate_num(self, s) -> float:
        """E_1[(mu_s0(W) - mu_10(W))^2]; s = () gives the v_Z denominator."""
        s = tuple(sorted(s))
        pw1 = self.joint(1).sum(axis=(1, 2))
        mu10 = self._mu_w(self._conditional_z(1))
        mus0 = self._mu_w(self._mixed_z(s))
        return float((pw1 * (mus0 - mu10) ** 2).sum())

    def covariate_value(self, s) -> float:
        return 1.0 - self.covariate_num(s) / self.covariate_num(())

    def outcome_den(self) -> float:
        """E_1[(mu_1(X) - mu_0(X))^2]."""
        return float((self.joint(1) * (self.mean_loss(1) - self.mean_loss(0)) ** 2).sum())

    def outcome_num(self, s) -> float:
        """E_1[(mu_1 - mu_s)^2] with mu_s the target risk given (w, z_s, q_bin)."""
        s = tuple(sorted(s))
        j1, p1 = self.joint(1), self.risk(1)
        qbin = bin_risk(self.risk(0).ravel(), self.B).reshape(2, 2, 2)
        f = self.predict_table()
        ps = np.empty((2, 2, 2))
        for w, a, b in product((0, 1), repeat=3):
            x = (w, a, b)
            mask = np.zeros((2, 2, 2), bool)
            for w2, a2, b2 in product((0, 1), repeat=3):
                y = (w2, a2, b2)
                if w2 == w and all(x[1 + k] == y[1 + k] for k in s) and qbin[y] == qbin[x]:
                    mask[y] = True
            ps[x] = (j1 * p1 * mask).sum() / (j1 * mask).sum()
        mus = f + (1 - 2 * f) * ps
        return float((j1 * (self.mean_loss(1) - mus) ** 2).sum())

    def outcome_value(self, s) -> float:
        return 1.0 - self.outcome_num(s) / self.outcome_den()

    def oracle_nuisances(self, settings: FitSettings | None = None) -> AggregateNuisances:
        """Aggregate nuisances equal to their population values."""
        j0, j1 = self.joint(0), self.joint(1)
        pw0, pw1 = j0.sum(axis=(1, 2)), j1.sum(axis=(1, 2))
        mu_00 = self._mu_w(self._conditional_z(0))
        return AggregateNuisances(
            mu_00=_table_learner(mu_00, "regression"),
            mu_dot0=LossModel(_table_learner(self.risk(0), "classification"), "outcome"),
            pi_100=_table_ratio(pw1, pw0),
            pi_110=_table_ratio(j1, j0),
            settings=settings or FitSettings(B=self.B),
        )
