"""Two-domain samples, per-row losses and train/evaluation splitting."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import pandas as pd

from .errors import DataError

Predictor = Callable[[np.ndarray, np.ndarray], np.ndarray]


def _binary(name: str, v: np.ndarray) -> np.ndarray:
    v = np.asarray(v)
    if v.ndim != 1:
        raise DataError(f"{name} must be a vector")
    if not np.all(np.isin(v, (0, 1))):
        raise DataError(f"{name} must contain only 0/1 values")
    return v.astype(np.int8)


def _matrix(name: str, a, n: int | None) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a.reshape(-1, 1) if a.size else a.reshape(n or 0, 0)
    if a.ndim != 2:
        raise DataError(f"{name} must be a 2-d array")
    if not np.all(np.isfinite(a)):
        raise DataError(f"{name} contains missing or non-finite values")
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """Pooled source (domain 0) and target (domain 1) rows.

    ``loss`` is the per-row loss of the fixed model under study. ``pred`` holds
    the model's predicted labels when the loss is the 0-1 loss of a label
    predictor; it lets nuisance models route through ``p(Y | W, Z)``.
    """

    w: np.ndarray
    z: np.ndarray
    y: np.ndarray
    domain: np.ndarray
    loss: np.ndarray
    w_names: tuple[str, ...] = ()
    z_names: tuple[str, ...] = ()
    pred: np.ndarray | None = None

    def __post_init__(self):
        y = _binary("y", self.y)
        n = y.shape[0]
        w = _matrix("w", self.w, n)
        z = _matrix("z", self.z, n)
        d = _binary("domain", self.domain)
        loss = np.asarray(self.loss, dtype=float)
        if w.shape[0] == 0 and n:
            w = np.zeros((n, 0))
        if not (w.shape[0] == z.shape[0] == d.shape[0] == loss.shape[0] == n):
            raise DataError("all columns must have the same length")
        if z.shape[1] < 1:
            raise DataError("at least one conditional covariate (Z column) is required")
        if not np.all(np.isfinite(loss)):
            raise DataError("loss contains missing or non-finite values")
        pred = None
        if self.pred is not None:
            pred = _binary("pred", self.pred)
            if pred.shape[0] != n:
                raise DataError("pred must have one entry per row")
        w_names = tuple(self.w_names) or tuple(f"W{j + 1}" for j in range(w.shape[1]))
        z_names = tuple(self.z_names) or tuple(f"Z{j + 1}" for j in range(z.shape[1]))
        if len(w_names) != w.shape[1] or len(z_names) != z.shape[1]:
            raise DataError("column names do not match matrix widths")
        for a in (w, z, y, d, loss) + ((pred,) if pred is not None else ()):
            a.setflags(write=False)
        for k, v in dict(w=w, z=z, y=y, domain=d, loss=loss, pred=pred,
                         w_names=w_names, z_names=z_names).items():
            object.__setattr__(self, k, v)

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def m1(self) -> int:
        return self.w.shape[1]

    @property
    def m2(self) -> int:
        return self.z.shape[1]

    @property
    def x(self) -> np.ndarray:
        return np.hstack([self.w, self.z])

    def take(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(
            self.w[idx], self.z[idx], self.y[idx], self.domain[idx], self.loss[idx],
            self.w_names, self.z_names, None if self.pred is None else self.pred[idx],
        )

    def require_both_domains(self) -> "Dataset":
        if not (0 < int(self.domain.sum()) < self.n):
            raise DataError("both source and target domains must be non-empty")
        return self

    def loss_pairs(self) -> tuple[np.ndarray, np.ndarray] | None:
        """(loss if Y=0, loss if Y=1) per row, when predicted labels are known."""
        if self.pred is None:
            return None
        f = self.pred.astype(float)
        return f, 1.0 - f


class ZeroOneLoss:
    """0-1 loss of a label predictor, evaluable at feature rows never observed.

    ``predict(w, z)`` returns predicted labels in {0, 1}.
    """

    def __init__(self, predict: Predictor):
        self.predict = predict

    def pairs(self, w: np.ndarray, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        f = np.asarray(self.predict(w, z), dtype=float).ravel()
        return f, 1.0 - f

    def __call__(self, w, z, y) -> np.ndarray:
        f, _ = self.pairs(w, z)
        return (f != np.asarray(y)).astype(float)


def compute_loss(predictions, y, mode: str = "label", threshold: float | None = None) -> np.ndarray:
    """Per-row 0-1 loss.

    ``mode="label"`` compares predicted labels to ``y``; ``mode="score"``
    first converts scores to labels with ``score > threshold``.
    """
    predictions = np.asarray(predictions, dtype=float)
    y = np.asarray(y)
    if predictions.shape != y.shape:
        raise DataError(f"length mismatch: {predictions.shape} predictions vs {y.shape} outcomes")
    y = _binary("y", y)
    if mode == "label":
        labels = predictions
    elif mode == "score":
        if threshold is None or not 0.0 < threshold < 1.0:
            raise DataError("score mode needs a threshold in (0, 1)")
        labels = (predictions > threshold).astype(float)
    else:
        raise DataError(f"unknown loss mode {mode!r}")
    return (labels != y).astype(float)


@dataclass(frozen=True)
class SplitPlan:
    train_indices: np.ndarray
    eval_indices: np.ndarray
    train_fraction: float
    seed: int
    fold: int | None = field(default=None)


def split(dataset: Dataset, train_fraction: float = 0.8, seed: int = 0) -> SplitPlan:
    """Domain-stratified random split into training and evaluation rows."""
    if not 0.0 < train_fraction < 1.0:
        raise DataError("train_fraction must lie strictly between 0 and 1")
    rng = np.random.default_rng(seed)
    train, ev = [], []
    for d in (0, 1):
        idx = np.flatnonzero(dataset.domain == d)
        if idx.size < 2:
            raise DataError(f"domain {d} needs at least 2 rows to split")
        k = int(np.floor(train_fraction * idx.size))
        k = min(max(k, 1), idx.size - 1)
        perm = rng.permutation(idx)
        train.append(perm[:k])
        ev.append(perm[k:])
    return SplitPlan(np.sort(np.concatenate(train)), np.sort(np.concatenate(ev)),
                     float(train_fraction), int(seed))


def kfold_plans(dataset: Dataset, folds: int, seed: int = 0) -> list[SplitPlan]:
    """Domain-stratified K-fold rotation used for cross-fitting."""
    if folds < 2:
        raise DataError("cross-fitting needs at least 2 folds")
    rng = np.random.default_rng(seed)
    assign = np.empty(dataset.n, dtype=int)
    for d in (0, 1):
        idx = rng.permutation(np.flatnonzero(dataset.domain == d))
        if idx.size < folds:
            raise DataError(f"domain {d} has fewer rows than folds")
        assign[idx] = np.arange(idx.size) % folds
    all_idx = np.arange(dataset.n)
    return [
        SplitPlan(all_idx[assign != k], all_idx[assign == k], 1.0 - 1.0 / folds, int(seed), fold=k)
        for k in range(folds)
    ]


def from_frame(
    frame: pd.DataFrame,
    w_cols: Sequence[str],
    z_cols: Sequence[str],
    y_col: str,
    domain_col: str,
    loss_col: str | None = None,
    pred_col: str | None = None,
    threshold: float | None = None,
) -> Dataset:
    """Build a Dataset from a frame holding a domain column.

    Exactly one of ``loss_col`` / ``pred_col`` must be given. With ``pred_col``
    and a ``threshold`` the column is read as scores.
    """
    needed = list(w_cols) + list(z_cols) + [y_col, domain_col]
    if (loss_col is None) == (pred_col is None):
        raise DataError("give exactly one of loss_col or pred_col")
    needed.append(loss_col or pred_col)
    missing = [c for c in needed if c not in frame.columns]
    if missing:
        raise DataError(f"missing column(s): {', '.join(missing)}")
    sub = frame[needed]
    if sub.isna().any().any():
        bad = [c for c in needed if sub[c].isna().any()]
        raise DataError(f"missing values in column(s): {', '.join(bad)}")
    try:
        num = sub.astype(float)
    except (TypeError, ValueError) as exc:
        raise DataError(f"non-numeric data: {exc}") from None
    y = num[y_col].to_numpy()
    pred = None
    if pred_col is not None:
        raw = num[pred_col].to_numpy()
        if threshold is None:
            loss = compute_loss(raw, y, "label")
            pred = raw
        else:
            loss = compute_loss(raw, y, "score", threshold)
            pred = (raw > threshold).astype(float)
    else:
        loss = num[loss_col].to_numpy()
    return Dataset(
        num[list(w_cols)].to_numpy(), num[list(z_cols)].to_numpy(), y,
        num[domain_col].to_numpy(), loss, tuple(w_cols), tuple(z_cols), pred,
    ).require_both_domains()


def read_csv(source, target=None, *, domain_col: str = "domain", **roles) -> Dataset:
    """Load one CSV with a domain column, or a (source, target) pair of CSVs."""
    # the default C parser can be off by one ulp; round_trip keeps %.17g exact
    opts = {"float_precision": "round_trip"}
    try:
        if target is None:
            frame = pd.read_csv(source, **opts)
        else:
            a, b = pd.read_csv(source, **opts), pd.read_csv(target, **opts)
            a[domain_col], b[domain_col] = 0, 1
            frame = pd.concat([a, b], ignore_index=True)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise DataError(f"cannot read input: {exc}") from None
    return from_frame(frame, domain_col=domain_col, **roles)
