"""Random forests and discrete AdaBoost over decision stumps."""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np

from . import cart
from ._rng import make_rng
from .errors import DataError, SchemaError

log = logging.getLogger(__name__)

MODEL_FORMAT_VERSION = 1
EPS_CLAMP = 1e-10


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    mtry: int = 1
    seed: int = 42
    min_split: int = 2
    min_leaf: int = 1
    max_depth: int = 30
    cp: float = 0.0
    # Test hook: grow every tree on the full sample instead of a bootstrap.
    bootstrap: bool = True

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if not 1 <= self.mtry <= 3:
            raise ValueError("mtry must lie in [1, 3]")

    @property
    def tree_params(self) -> cart.TreeParams:
        return cart.TreeParams(self.min_split, self.min_leaf, self.max_depth, self.cp)


@dataclass
class Forest:
    trees: list
    oob_indices: list
    importance_raw: np.ndarray
    params: ForestParams
    _flat: list = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self._flat is None:
            self._flat = [cart.flatten(t) for t in self.trees]

    def votes(self, X) -> np.ndarray:
        """Per-tree class votes, shape (n_trees, n_rows)."""
        return np.stack([cart.predict_flat(f, X)[0] for f in self._flat])

    def predict(self, X) -> tuple[np.ndarray, np.ndarray]:
        score = self.votes(X).mean(axis=0)
        return (score > 0.5).astype(np.int64), score

    def to_dict(self) -> dict:
        return {
            "version": MODEL_FORMAT_VERSION,
            "params": asdict(self.params),
            "importance_raw": self.importance_raw.tolist(),
            "oob_indices": [idx.tolist() for idx in self.oob_indices],
            "trees": [cart.node_to_dict(t) for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Forest":
        if d.get("version") != MODEL_FORMAT_VERSION:
            raise SchemaError(f"forest format version {d.get('version')!r}, expected {MODEL_FORMAT_VERSION}")
        return cls(
            trees=[cart.node_from_dict(t) for t in d["trees"]],
            oob_indices=[np.asarray(i, dtype=np.int64) for i in d["oob_indices"]],
            importance_raw=np.asarray(d["importance_raw"], dtype=float),
            params=ForestParams(**d["params"]),
        )


def _accumulate_importance(node, out: np.ndarray, n_root: int) -> None:
    if isinstance(node, cart.Split):
        out[node.feature] += (node.counts[0] + node.counts[1]) / n_root * node.impurity_decrease
        _accumulate_importance(node.left, out, n_root)
        _accumulate_importance(node.right, out, n_root)


def fit_forest(X, y, params: ForestParams = ForestParams()) -> Forest:
    """Bagged trees with a fresh random feature subset at every split.

    Tree ``t`` draws its bootstrap and feature subsets from the stream
    ``(seed, t)`` alone, so trees are independent of fitting order.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    n = X.shape[0]
    if n == 0:
        raise DataError("cannot fit a forest on an empty training set")
    tp = params.tree_params
    trees, oob = [], []
    importance = np.zeros(X.shape[1])
    for t in range(params.n_trees):
        rng = make_rng(params.seed, t)
        if params.bootstrap:
            boot = rng.integers(0, n, size=n)
        else:
            boot = np.arange(n)
        in_bag = np.zeros(n, dtype=bool)
        in_bag[boot] = True
        tree = cart.grow(X[boot], y[boot], tp, mtry=params.mtry, rng=rng)
        _accumulate_importance(tree, importance, n)
        trees.append(tree)
        oob.append(np.flatnonzero(~in_bag))
    return Forest(trees, oob, importance, params)


def forest_predict(f: Forest, x) -> tuple[int, float]:
    cls, score = f.predict(np.atleast_2d(x))
    return int(cls[0]), float(score[0])


def feature_importance(f: Forest) -> np.ndarray:
    """Mean-decrease-in-impurity importance normalized to sum to 1."""
    total = float(f.importance_raw.sum())
    if total <= 0:
        raise DataError("forest made no splits; importance is undefined")
    return f.importance_raw / total


def oob_error(f: Forest, X, y) -> float:
    """Misclassification rate of out-of-bag majority votes.

    Samples that were in every bootstrap get no vote; they are skipped and
    their number logged.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    ones = np.zeros(len(y))
    voters = np.zeros(len(y))
    for flat, idx in zip(f._flat, f.oob_indices):
        if idx.size == 0:
            continue
        pred, _ = cart.predict_flat(flat, X[idx])
        ones[idx] += pred
        voters[idx] += 1
    voted = voters > 0
    skipped = int(np.sum(~voted))
    if skipped:
        log.info("oob_error: %d sample(s) never out of bag, skipped", skipped)
    if not voted.any():
        return float("nan")
    pred = (ones[voted] / voters[voted] > 0.5).astype(np.int64)
    return float(np.mean(pred != y[voted]))


def stump_weight(epsilon: float) -> float:
    e = min(max(epsilon, EPS_CLAMP), 1.0 - EPS_CLAMP)
    return 0.5 * math.log((1.0 - e) / e)


@dataclass(frozen=True)
class Stump:
    """Depth-1 rule: +1 when ``x[feature] >= threshold``, flipped if polarity is -1."""

    feature: int
    threshold: float
    polarity: int

    def sign(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        h = np.where(X[:, self.feature] >= self.threshold, 1, -1)
        return h * self.polarity

    def as_tree(self) -> cart.Split:
        """The stump as a one-split tree whose leaves vote for its classes.

        Leaf counts are unit markers, not training counts.
        """
        lo = cart.Leaf((1, 0)) if self.polarity == 1 else cart.Leaf((0, 1))
        hi = cart.Leaf((0, 1)) if self.polarity == 1 else cart.Leaf((1, 0))
        return cart.Split(self.feature, self.threshold, lo, hi, (1, 1), 0.0, 0.0, 0.0)


@dataclass(frozen=True)
class BoostParams:
    n_stumps: int = 10
    seed: int = 42

    def __post_init__(self):
        if self.n_stumps < 1:
            raise ValueError("n_stumps must be >= 1")


@dataclass
class BoostModel:
    stumps: list
    alphas: list
    training_errors: list
    params: BoostParams

    def margin(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        m = np.zeros(X.shape[0])
        for stump, alpha in zip(self.stumps, self.alphas):
            m += alpha * stump.sign(X)
        return m

    def predict(self, X) -> tuple[np.ndarray, np.ndarray]:
        m = self.margin(X)
        scale = sum(abs(a) for a in self.alphas)
        score = 0.5 * (1.0 + m / scale) if scale > 0 else np.full(m.shape, 0.5)
        return (m > 0).astype(np.int64), np.clip(score, 0.0, 1.0)

    def error_bound(self) -> float:
        """Product bound on the ensemble's unweighted training error."""
        return float(np.prod([2.0 * math.sqrt(e * (1.0 - e)) for e in self.training_errors]))

    def to_dict(self) -> dict:
        return {
            "version": MODEL_FORMAT_VERSION,
            "params": asdict(self.params),
            "stumps": [asdict(s) for s in self.stumps],
            "alphas": list(self.alphas),
            "training_errors": list(self.training_errors),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BoostModel":
        if d.get("version") != MODEL_FORMAT_VERSION:
            raise SchemaError(f"boost format version {d.get('version')!r}, expected {MODEL_FORMAT_VERSION}")
        return cls(
            stumps=[Stump(int(s["feature"]), float(s["threshold"]), int(s["polarity"])) for s in d["stumps"]],
            alphas=[float(a) for a in d["alphas"]],
            training_errors=[float(e) for e in d["training_errors"]],
            params=BoostParams(**d["params"]),
        )


def best_stump(X, y_pm, w) -> tuple[Optional[Stump], float]:
    """Stump with the lowest weighted error over every feature, midpoint
    threshold and polarity. Ties keep the lowest feature, then the lowest
    threshold, then polarity +1."""
    best, best_err = None, math.inf
    for f in range(X.shape[1]):
        order = np.argsort(X[:, f], kind="mergesort")
        xs = X[order, f]
        ys = y_pm[order]
        ws = w[order]
        boundary = np.flatnonzero(xs[1:] > xs[:-1])
        if boundary.size == 0:
            continue
        # polarity +1 predicts -1 below the threshold, +1 at or above it
        neg_below = np.cumsum(ws * (ys == 1))  # positives called -1
        pos_above = np.sum(ws * (ys == -1)) - np.cumsum(ws * (ys == -1))  # negatives called +1
        err_plus = (neg_below + pos_above)[boundary]
        err_minus = w.sum() - err_plus
        thresholds = (xs[boundary] + xs[boundary + 1]) / 2.0
        for errs, polarity in ((err_plus, 1), (err_minus, -1)):
            k = int(np.argmin(errs))
            e = float(errs[k])
            if e < best_err or (e == best_err and best is not None and f == best.feature
                                and thresholds[k] < best.threshold):
                best, best_err = Stump(f, float(thresholds[k]), polarity), e
    return best, best_err


def fit_adaboost(
    X,
    y,
    params: BoostParams = BoostParams(),
    on_round: Optional[Callable[[int, np.ndarray], None]] = None,
) -> BoostModel:
    """Discrete AdaBoost with labels mapped to -1/+1.

    Stops early on a perfect stump (kept with the clamped maximum weight)
    or on a stump no better than chance (discarded). ``on_round`` receives
    the round index and the renormalized sample weights.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    n = X.shape[0]
    if n == 0:
        raise DataError("cannot boost on an empty training set")
    if np.all(y == y[0]):
        raise DataError("AdaBoost needs both classes in the training set")
    y_pm = np.where(y == 1, 1, -1)
    w = np.full(n, 1.0 / n)
    stumps, alphas, errors = [], [], []
    for t in range(params.n_stumps):
        stump, err = best_stump(X, y_pm, w)
        if stump is None:
            break
        err = min(max(err, 0.0), 1.0)
        if err >= 0.5:
            break
        if err <= EPS_CLAMP:
            stumps.append(stump)
            alphas.append(stump_weight(EPS_CLAMP))
            errors.append(EPS_CLAMP)
            break
        alpha = stump_weight(err)
        w = w * np.exp(-alpha * y_pm * stump.sign(X))
        w = w / w.sum()
        stumps.append(stump)
        alphas.append(alpha)
        errors.append(err)
        if on_round is not None:
            on_round(t, w)
    if not stumps:
        raise DataError("no stump beats chance on this training set")
    model = BoostModel(stumps, alphas, errors, params)
    train_err = float(np.mean(model.predict(X)[0] != y))
    if train_err > model.error_bound() + 1e-12:
        log.warning("AdaBoost training error %.6g exceeds its bound %.6g", train_err, model.error_bound())
    return model


def adaboost_predict(m: BoostModel, x) -> tuple[int, float]:
    cls, score = m.predict(np.atleast_2d(x))
    return int(cls[0]), float(score[0])
