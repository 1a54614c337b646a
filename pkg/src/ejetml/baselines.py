"""K-nearest neighbours and logistic regression on standardized features."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.special import expit, log_expit

from .dataset import ScalerParams, standardize_apply, standardize_fit
from .errors import DataError, NumericError, SchemaError

MODEL_FORMAT_VERSION = 1
_P_MIN = np.finfo(float).tiny
_P_MAX = 1.0 - np.finfo(float).epsneg


def sigmoid(z):
    return expit(z)


def knn_scores(X_train_std, y_train, X_std, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Vote share of class 1 among the k nearest training points.

    Distance ties go to the lower training index. A split vote (possible
    for even k) goes to the class of the single nearest neighbour.
    """
    Xt = np.asarray(X_train_std, dtype=float)
    yt = np.asarray(y_train, dtype=np.int64)
    Q = np.atleast_2d(np.asarray(X_std, dtype=float))
    n = Xt.shape[0]
    if n == 0:
        raise DataError("KNN needs a non-empty training set")
    if not 1 <= k <= n:
        raise DataError(f"k={k} must lie in [1, {n}]")
    d2 = ((Q[:, None, :] - Xt[None, :, :]) ** 2).sum(axis=2)
    nearest = np.argsort(d2, axis=1, kind="stable")[:, :k]
    labels = yt[nearest]
    ones = labels.sum(axis=1)
    score = ones / k
    cls = np.where(2 * ones > k, 1, 0)
    tie = 2 * ones == k
    cls[tie] = labels[tie, 0]
    return cls.astype(np.int64), score


def knn_predict(X_train_std, y_train, x_std, k: int) -> tuple[int, float]:
    cls, score = knn_scores(X_train_std, y_train, np.atleast_2d(x_std), k)
    return int(cls[0]), float(score[0])


@dataclass
class KnnModel:
    """Stores the standardized training set; prediction standardizes queries."""

    k: int
    scaler: ScalerParams
    X_std: np.ndarray
    y: np.ndarray

    @classmethod
    def fit(cls, X, y, k: int) -> "KnnModel":
        X = np.asarray(X, dtype=float)
        if X.shape[0] == 0:
            raise DataError("KNN needs a non-empty training set")
        if not 1 <= k <= X.shape[0]:
            raise DataError(f"k={k} must lie in [1, {X.shape[0]}]")
        sp = standardize_fit(X)
        return cls(k, sp, standardize_apply(X, sp), np.asarray(y, dtype=np.int64))

    def predict(self, X) -> tuple[np.ndarray, np.ndarray]:
        return knn_scores(self.X_std, self.y, standardize_apply(X, self.scaler), self.k)

    def to_dict(self) -> dict:
        return {
            "version": MODEL_FORMAT_VERSION,
            "k": self.k,
            "scaler": self.scaler.to_dict(),
            "X_std": self.X_std.tolist(),
            "y": self.y.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "KnnModel":
        if d.get("version") != MODEL_FORMAT_VERSION:
            raise SchemaError(f"knn format version {d.get('version')!r}, expected {MODEL_FORMAT_VERSION}")
        return cls(
            int(d["k"]),
            ScalerParams.from_dict(d["scaler"]),
            np.asarray(d["X_std"], dtype=float).reshape(-1, len(d["scaler"]["mean"])),
            np.asarray(d["y"], dtype=np.int64),
        )


def cross_entropy(w, b, Z, y) -> float:
    """Mean binary cross-entropy of ``sigmoid(Z @ w + b)`` against y."""
    z = Z @ w + b
    return float(-np.mean(y * log_expit(z) + (1 - y) * log_expit(-z)))


def cross_entropy_grad(w, b, Z, y) -> tuple[np.ndarray, float]:
    """Analytic gradient of ``cross_entropy`` with respect to (w, b)."""
    r = expit(Z @ w + b) - y
    return Z.T @ r / len(y), float(np.mean(r))


@dataclass
class LogregModel:
    weights: np.ndarray
    bias: float
    scaler: ScalerParams
    final_loss: float
    epochs_run: int

    def proba(self, X) -> np.ndarray:
        Z = standardize_apply(X, self.scaler)
        # keep probabilities strictly inside (0, 1) even where expit saturates
        return np.clip(expit(Z @ self.weights + self.bias), _P_MIN, _P_MAX)

    def predict(self, X) -> tuple[np.ndarray, np.ndarray]:
        p = self.proba(X)
        return (p > 0.5).astype(np.int64), p

    def to_dict(self) -> dict:
        return {
            "version": MODEL_FORMAT_VERSION,
            "weights": self.weights.tolist(),
            "bias": self.bias,
            "scaler": self.scaler.to_dict(),
            "final_loss": self.final_loss,
            "epochs_run": self.epochs_run,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LogregModel":
        if d.get("version") != MODEL_FORMAT_VERSION:
            raise SchemaError(f"logreg format version {d.get('version')!r}, expected {MODEL_FORMAT_VERSION}")
        return cls(
            np.asarray(d["weights"], dtype=float),
            float(d["bias"]),
            ScalerParams.from_dict(d["scaler"]),
            float(d["final_loss"]),
            int(d["epochs_run"]),
        )


def fit_logreg(
    X,
    y,
    lr: float = 0.1,
    max_epochs: int = 5000,
    tol: float = 1e-8,
    on_epoch: Optional[Callable[[int, float], None]] = None,
) -> LogregModel:
    """Full-batch gradient descent on mean cross-entropy from zero weights.

    Features are standardized internally. Stops after ``max_epochs`` or
    once the loss changes by less than ``tol`` between epochs.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.shape[0] == 0:
        raise DataError("logistic regression needs a non-empty training set")
    if np.all(y == y[0]):
        raise DataError("logistic regression needs both classes in the training set")
    sp = standardize_fit(X)
    Z = standardize_apply(X, sp)
    w = np.zeros(Z.shape[1])
    b = 0.0
    loss = cross_entropy(w, b, Z, y)
    epoch = 0
    # overflow shows up as a non-finite loss, reported below with its epoch
    with np.errstate(over="ignore", invalid="ignore"):
        while epoch < max_epochs:
            gw, gb = cross_entropy_grad(w, b, Z, y)
            w = w - lr * gw
            b = b - lr * gb
            epoch += 1
            new_loss = cross_entropy(w, b, Z, y)
            if not math.isfinite(new_loss):
                raise NumericError(f"logistic regression loss became non-finite at epoch {epoch}")
            if on_epoch is not None:
                on_epoch(epoch, new_loss)
            converged = abs(loss - new_loss) < tol
            loss = new_loss
            if converged:
                break
    return LogregModel(w, float(b), sp, loss, epoch)


def logreg_predict(m: LogregModel, x) -> tuple[int, float]:
    cls, p = m.predict(np.atleast_2d(x))
    return int(cls[0]), float(p[0])
