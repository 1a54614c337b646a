"""Confusion-matrix metrics, ROC curves and AUC for the binary case.

Class 1 (high conductance) is the positive class throughout. Metrics whose
denominator vanishes come back as None rather than 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DataError

CONVENTIONAL = "conventional"
SWAPPED = "swapped"
TABLE_COLUMNS = ("model", "accuracy", "misclassification", "f1", "auc", "kappa", "recall")


@dataclass(frozen=True)
class ConfusionMatrix:
    """Rows are the actual class, columns the predicted class."""

    tn: int
    fp: int
    fn: int
    tp: int

    def __post_init__(self):
        if min(self.tn, self.fp, self.fn, self.tp) < 0:
            raise DataError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tn + self.fp + self.fn + self.tp

    @classmethod
    def from_table(cls, rows) -> "ConfusionMatrix":
        """From ``[[actual0->pred0, actual0->pred1], [actual1->pred0, actual1->pred1]]``."""
        (tn, fp), (fn, tp) = rows
        return cls(int(tn), int(fp), int(fn), int(tp))

    def as_table(self) -> list[list[int]]:
        return [[self.tn, self.fp], [self.fn, self.tp]]


def confusion(actual: Sequence[int], predicted: Sequence[int]) -> ConfusionMatrix:
    a = np.asarray(actual, dtype=np.int64)
    p = np.asarray(predicted, dtype=np.int64)
    if a.shape != p.shape:
        raise DataError(f"length mismatch: {a.shape[0]} actual vs {p.shape[0]} predicted")
    if a.size == 0:
        raise DataError("confusion matrix needs at least one prediction")
    return ConfusionMatrix(
        tn=int(np.sum((a == 0) & (p == 0))),
        fp=int(np.sum((a == 0) & (p == 1))),
        fn=int(np.sum((a == 1) & (p == 0))),
        tp=int(np.sum((a == 1) & (p == 1))),
    )


def accuracy(cm: ConfusionMatrix) -> float:
    return (cm.tp + cm.tn) / cm.total


def misclassification(cm: ConfusionMatrix) -> float:
    return 1.0 - accuracy(cm)


def _conventional_precision(cm):
    d = cm.tp + cm.fp
    return cm.tp / d if d else None


def _conventional_recall(cm):
    d = cm.tp + cm.fn
    return cm.tp / d if d else None


def precision(cm: ConfusionMatrix, mode: str = CONVENTIONAL) -> Optional[float]:
    """tp / (tp + fp). ``mode="swapped"`` returns tp / (tp + fn) instead."""
    if mode == SWAPPED:
        return _conventional_recall(cm)
    if mode != CONVENTIONAL:
        raise ValueError(f"unknown metric mode {mode!r}")
    return _conventional_precision(cm)


def recall(cm: ConfusionMatrix, mode: str = CONVENTIONAL) -> Optional[float]:
    """tp / (tp + fn); swapped with precision under ``mode="swapped"``."""
    if mode == SWAPPED:
        return _conventional_precision(cm)
    if mode != CONVENTIONAL:
        raise ValueError(f"unknown metric mode {mode!r}")
    return _conventional_recall(cm)


def f1(cm: ConfusionMatrix, mode: str = CONVENTIONAL) -> Optional[float]:
    p = precision(cm, mode)
    r = recall(cm, mode)
    if p is None or r is None or p + r == 0:
        return None
    return 2.0 * (p * r) / (p + r)


def random_accuracy(cm: ConfusionMatrix) -> float:
    row0 = cm.tn + cm.fp
    row1 = cm.fn + cm.tp
    col0 = cm.tn + cm.fn
    col1 = cm.fp + cm.tp
    return (row0 * col0 + row1 * col1) / cm.total**2


def kappa(cm: ConfusionMatrix) -> Optional[float]:
    """Cohen's kappa; None when chance agreement is already 1."""
    row0 = cm.tn + cm.fp
    row1 = cm.fn + cm.tp
    col0 = cm.tn + cm.fn
    col1 = cm.fp + cm.tp
    total = cm.total
    expected = row0 * col0 + row1 * col1
    if expected == total * total:
        return None
    # Integer numerator/denominator keeps the statistic exact until the final division.
    return (total * (cm.tp + cm.tn) - expected) / (total * total - expected)


@dataclass(frozen=True)
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.fpr.tolist(), self.tpr.tolist()))

    def to_csv(self) -> str:
        rows = ["fpr,tpr"]
        rows += [f"{x:.6g},{y:.6g}" for x, y in zip(self.fpr, self.tpr)]
        return "\n".join(rows) + "\n"


def roc_curve(scores: Sequence[float], actual: Sequence[int]) -> RocCurve:
    """Threshold sweep from the highest score down.

    Tied scores enter together, so a tie group moves the curve diagonally.
    The first point is (0, 0) at threshold +inf.
    """
    s = np.asarray(scores, dtype=float)
    a = np.asarray(actual, dtype=np.int64)
    if s.shape != a.shape:
        raise DataError("scores and labels differ in length")
    n_pos = int(np.sum(a == 1))
    n_neg = int(np.sum(a == 0))
    if n_pos == 0 or n_neg == 0:
        raise DataError("ROC needs both classes among the actual labels")
    order = np.argsort(-s, kind="mergesort")
    s_sorted = s[order]
    pos = np.cumsum(a[order] == 1)
    neg = np.cumsum(a[order] == 0)
    # last index of each tie group
    ends = np.flatnonzero(np.r_[s_sorted[1:] != s_sorted[:-1], True])
    fpr = np.r_[0.0, neg[ends] / n_neg]
    tpr = np.r_[0.0, pos[ends] / n_pos]
    thresholds = np.r_[np.inf, s_sorted[ends]]
    if fpr[-1] != 1.0 or tpr[-1] != 1.0:
        fpr = np.r_[fpr, 1.0]
        tpr = np.r_[tpr, 1.0]
        thresholds = np.r_[thresholds, -np.inf]
    return RocCurve(fpr, tpr, thresholds)


def auc(curve: RocCurve) -> float:
    """Trapezoidal area under the ROC points."""
    x, y = curve.fpr, curve.tpr
    return float(np.sum((x[1:] - x[:-1]) * (y[1:] + y[:-1])) / 2.0)


def roc_auc(scores, actual) -> float:
    return auc(roc_curve(scores, actual))


@dataclass
class EvalReport:
    model_name: str
    cm: ConfusionMatrix
    accuracy: float
    misclassification: float
    precision: Optional[float]
    recall: Optional[float]
    f1: Optional[float]
    kappa: Optional[float]
    auc: Optional[float]
    roc: Optional[RocCurve] = field(default=None, repr=False, compare=False)

    def row(self) -> dict:
        return {
            "model": self.model_name,
            "accuracy": self.accuracy,
            "misclassification": self.misclassification,
            "f1": self.f1,
            "auc": self.auc,
            "kappa": self.kappa,
            "recall": self.recall,
        }

    def to_dict(self) -> dict:
        d = self.row()
        d["precision"] = self.precision
        d["confusion"] = self.cm.as_table()
        return d


def evaluate(
    model_name: str,
    actual,
    predicted,
    scores=None,
    mode: str = CONVENTIONAL,
) -> EvalReport:
    """Full metric bundle; AUC is None without scores or with one class present."""
    cm = confusion(actual, predicted)
    roc = None
    area = None
    if scores is not None:
        a = np.asarray(actual)
        if np.any(a == 0) and np.any(a == 1):
            roc = roc_curve(scores, actual)
            area = auc(roc)
    return EvalReport(
        model_name=model_name,
        cm=cm,
        accuracy=accuracy(cm),
        misclassification=misclassification(cm),
        precision=precision(cm, mode),
        recall=recall(cm, mode),
        f1=f1(cm, mode),
        kappa=kappa(cm),
        auc=area,
        roc=roc,
    )


def format_real(value: Optional[float]) -> str:
    return "" if value is None else format(value, ".6g")


def reports_to_csv(reports: Sequence[EvalReport]) -> str:
    rows = [",".join(TABLE_COLUMNS)]
    for rep in reports:
        r = rep.row()
        rows.append(",".join([r["model"]] + [format_real(r[c]) for c in TABLE_COLUMNS[1:]]))
    return "\n".join(rows) + "\n"
