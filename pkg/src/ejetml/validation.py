"""Seeded resampling: k-fold CV, out-of-resample bootstrap, parameter sweeps."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ._rng import derive_seed, make_rng
from .dataset import Dataset
from .errors import DataError
from .metrics import EvalReport, evaluate
from .models import ModelSpec, fit_model

METRIC_FIELDS = ("accuracy", "misclassification", "precision", "recall", "f1", "kappa", "auc")
MAX_REDRAWS = 100


@dataclass(frozen=True)
class FoldPlan:
    k: int
    assignments: np.ndarray
    seed: int
    stratified: bool

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments != fold)


@dataclass
class CvResult:
    reports: list
    mean: dict
    sd: dict
    # Pooled held-out predictions, aligned with the input order; unset for bootstrap.
    oof_pred: Optional[np.ndarray] = field(default=None, repr=False)
    oof_score: Optional[np.ndarray] = field(default=None, repr=False)


@dataclass
class SweepResult:
    values: list
    mean_accuracy: list
    sd: list

    def to_csv(self, param: str = "param") -> str:
        rows = [f"{param},mean_accuracy,sd"]
        rows += [f"{v:.6g},{m:.6g},{s:.6g}" for v, m, s in zip(self.values, self.mean_accuracy, self.sd)]
        return "\n".join(rows) + "\n"


def _xy(ds):
    if isinstance(ds, Dataset):
        ds.require_trainable()
        return ds.X, ds.y
    X, y = ds
    return np.asarray(X, dtype=float), np.asarray(y, dtype=np.int64)


def make_folds(ds, k: int, seed: int, stratified: bool = True) -> FoldPlan:
    """Shuffle (within class when stratified), then deal indices round-robin.

    Classes are dealt one after another without restarting at fold 0, so
    folds differ in size by at most one both overall and per class.
    """
    _, y = _xy(ds)
    n = len(y)
    if k < 2:
        raise DataError("k must be >= 2")
    if k > n:
        raise DataError(f"k={k} exceeds the {n} available samples")
    rng = make_rng(seed)
    if stratified:
        order = []
        for c in sorted(set(y.tolist())):
            members = np.flatnonzero(y == c)
            if len(members) < k:
                raise DataError(f"class {c} has {len(members)} samples, fewer than k={k} folds")
            order.extend(rng.permutation(members).tolist())
        order = np.asarray(order, dtype=np.int64)
    else:
        order = rng.permutation(n)
    assignments = np.empty(n, dtype=np.int64)
    assignments[order] = np.arange(n) % k
    return FoldPlan(k, assignments, seed, stratified)


def aggregate(reports: Sequence[EvalReport]) -> tuple[dict, dict]:
    """Mean and population sd of every metric, skipping undefined entries."""
    mean, sd = {}, {}
    for name in METRIC_FIELDS:
        vals = [getattr(r, name) for r in reports if getattr(r, name) is not None]
        if vals:
            arr = np.asarray(vals, dtype=float)
            mean[name] = float(arr.mean())
            sd[name] = float(arr.std())
        else:
            mean[name] = None
            sd[name] = None
    return mean, sd


def cross_validate(spec: ModelSpec, ds, k: int = 10, seed: int = 42, stratified: bool = True,
                   plan: Optional[FoldPlan] = None) -> CvResult:
    """Fit on each fold's complement and score the held-out fold.

    Fold ``i`` trains with seed ``derive_seed(seed, i)``.
    """
    X, y = _xy(ds)
    plan = plan or make_folds((X, y), k, seed, stratified)
    reports = []
    oof_pred = np.zeros(len(y), dtype=np.int64)
    oof_score = np.zeros(len(y))
    for fold in range(plan.k):
        tr = plan.train_indices(fold)
        te = plan.test_indices(fold)
        try:
            model = fit_model(spec, X[tr], y[tr], seed=derive_seed(seed, fold))
        except Exception as exc:
            exc.args = (f"fold {fold}: {exc.args[0] if exc.args else exc}",) + exc.args[1:]
            exc.fold = fold
            raise
        pred, score = model.predict(X[te])
        oof_pred[te] = pred
        oof_score[te] = score
        reports.append(evaluate(spec.label, y[te], pred, score))
    mean, sd = aggregate(reports)
    return CvResult(reports, mean, sd, oof_pred, oof_score)


def pooled_report(spec: ModelSpec, cv: CvResult, y) -> EvalReport:
    """One report over all out-of-fold predictions together."""
    return evaluate(spec.label, y, cv.oof_pred, cv.oof_score)


def bootstrap_validate(spec: ModelSpec, ds, B: int = 100, seed: int = 42) -> CvResult:
    """Fit on n-with-replacement resamples, score the samples left out.

    A round whose resample holds one class only or leaves nothing out is
    redrawn, at most ``MAX_REDRAWS`` times per round.
    """
    if B < 1:
        raise DataError("B must be >= 1")
    X, y = _xy(ds)
    n = len(y)
    reports = []
    for b in range(B):
        rng = make_rng(seed, b)
        for _ in range(MAX_REDRAWS):
            idx = rng.integers(0, n, size=n)
            out = np.setdiff1d(np.arange(n), idx)
            if out.size and np.any(y[idx] == 0) and np.any(y[idx] == 1):
                break
        else:
            raise DataError(f"bootstrap round {b}: no usable resample after {MAX_REDRAWS} draws")
        model = fit_model(spec, X[idx], y[idx], seed=derive_seed(seed, b))
        pred, score = model.predict(X[out])
        reports.append(evaluate(spec.label, y[out], pred, score))
    mean, sd = aggregate(reports)
    return CvResult(reports, mean, sd)


def sweep_cp(ds, cp_values: Sequence[float], k: int = 10, seed: int = 42,
             base: Optional[ModelSpec] = None) -> SweepResult:
    """CV accuracy of the default-grown tree pruned at each cp."""
    if not cp_values:
        raise DataError("cp_values must not be empty")
    base_params = dict(base.params) if base is not None else {}
    X, y = _xy(ds)
    plan = make_folds((X, y), k, seed)
    means, sds = [], []
    for cp in cp_values:
        if not 0.0 <= cp <= 1.0:
            raise DataError(f"cp={cp} outside [0, 1]")
        res = cross_validate(ModelSpec("tree", {**base_params, "cp": float(cp)}), (X, y), k, seed, plan=plan)
        means.append(res.mean["accuracy"])
        sds.append(res.sd["accuracy"])
    return SweepResult([float(c) for c in cp_values], means, sds)


def sweep_ntrees(ds, tree_counts: Sequence[int], k: int = 10, seed: int = 42) -> SweepResult:
    """CV accuracy of AdaBoost for each number of stumps."""
    if not tree_counts:
        raise DataError("tree_counts must not be empty")
    X, y = _xy(ds)
    plan = make_folds((X, y), k, seed)
    means, sds = [], []
    for count in tree_counts:
        if count < 1:
            raise DataError("tree counts must be >= 1")
        res = cross_validate(ModelSpec("adaboost", {"n_stumps": int(count)}), (X, y), k, seed, plan=plan)
        means.append(res.mean["accuracy"])
        sds.append(res.sd["accuracy"])
    return SweepResult([int(c) for c in tree_counts], means, sds)


def out_of_resample_fraction(n: int, seed: int) -> float:
    """Share of indices missed by one n-with-replacement draw (about 1/e)."""
    idx = make_rng(seed, 0).integers(0, n, size=n)
    return 1.0 - np.unique(idx).size / n

