"""Binary CART trees: Gini growth, cost-complexity pruning, prediction.

Splits are chosen greedily by Gini decrease. Each internal node also
records how much misclassification risk its split removed
(``risk_reduction``) and how much the whole subtree below it removed
(``complexity``); the complexity parameter compares those against the
root's risk, the way rpart's ``cp`` does.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, replace
from typing import Optional, Union

import numpy as np
from numba import njit

from .dataset import FEATURE_NAMES
from .errors import DataError, SchemaError

TREE_FORMAT_VERSION = 1

# Decreases at or below this are rounding noise from proportional children.
MIN_DECREASE = 1e-12
# Candidates whose decreases differ by less than this are ties; the one
# scanned first (lower feature, then lower threshold) wins.
TIE_TOL = 1e-12


@dataclass(frozen=True)
class TreeParams:
    min_split: int = 20
    min_leaf: int = 7
    max_depth: int = 30
    cp: float = 0.01

    def __post_init__(self):
        if self.min_leaf < 1:
            raise ValueError("min_leaf must be >= 1")
        if self.min_split < 2 * self.min_leaf:
            raise ValueError("min_split must be >= 2 * min_leaf")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if not 0.0 <= self.cp <= 1.0:
            raise ValueError("cp must lie in [0, 1]")


@dataclass(frozen=True)
class Leaf:
    counts: tuple[int, int]

    @property
    def predicted(self) -> int:
        return 1 if self.counts[1] > self.counts[0] else 0

    @property
    def score(self) -> float:
        return self.counts[1] / (self.counts[0] + self.counts[1])


@dataclass(frozen=True)
class Split:
    feature: int
    threshold: float
    left: "Node"
    right: "Node"
    counts: tuple[int, int]
    risk_reduction: float
    complexity: float
    impurity_decrease: float


Node = Union[Leaf, Split]


@dataclass(frozen=True)
class SplitChoice:
    feature: int
    threshold: float
    decrease: float


def gini(counts) -> float:
    n0, n1 = counts
    n = n0 + n1
    if n <= 0:
        raise DataError("gini of an empty node is undefined")
    p0 = n0 / n
    p1 = n1 / n
    return 1.0 - p0 * p0 - p1 * p1


def risk(counts) -> int:
    """Misclassification count of a node predicting its majority class."""
    return min(counts)


@njit(cache=True)
def _split_search(X, y, w, idx, feats, min_leaf, min_decrease, tie_tol):
    m = idx.shape[0]
    W0 = 0.0
    W1 = 0.0
    for i in range(m):
        j = idx[i]
        if y[j] == 1:
            W1 += w[j]
        else:
            W0 += w[j]
    W = W0 + W1
    p0 = W0 / W
    p1 = W1 / W
    g = 1.0 - p0 * p0 - p1 * p1

    best_f = -1
    best_t = 0.0
    best_d = min_decrease
    vals = np.empty(m)
    for fi in range(feats.shape[0]):
        f = feats[fi]
        for i in range(m):
            vals[i] = X[idx[i], f]
        order = np.argsort(vals, kind="mergesort")
        l0 = 0.0
        l1 = 0.0
        for r in range(m - 1):
            j = idx[order[r]]
            if y[j] == 1:
                l1 += w[j]
            else:
                l0 += w[j]
            a = vals[order[r]]
            b = vals[order[r + 1]]
            if not a < b:
                continue
            nl = r + 1
            if nl < min_leaf or m - nl < min_leaf:
                continue
            wl = l0 + l1
            q0 = l0 / wl
            q1 = l1 / wl
            gl = 1.0 - q0 * q0 - q1 * q1
            r0 = W0 - l0
            r1 = W1 - l1
            wr = r0 + r1
            s0 = r0 / wr
            s1 = r1 / wr
            gr = 1.0 - s0 * s0 - s1 * s1
            d = g - (wl / W) * gl - (wr / W) * gr
            if (best_f < 0 and d > best_d) or d > best_d + tie_tol:
                best_f = f
                best_t = (a + b) / 2.0
                best_d = d
    return best_f, best_t, best_d


def _search(X, y, w, idx, feats, min_leaf) -> Optional[SplitChoice]:
    f, t, d = _split_search(X, y, w, idx, feats, min_leaf, MIN_DECREASE, TIE_TOL)
    if f < 0:
        return None
    return SplitChoice(int(f), float(t), float(d))


def best_split(X, y, weights=None, *, min_leaf: int = 1, features=None) -> Optional[SplitChoice]:
    """Exhaustive search for the split with the largest Gini decrease.

    Thresholds are midpoints between consecutive distinct values of each
    feature; samples with ``x[feature] < threshold`` go left. Candidates
    leaving fewer than ``min_leaf`` samples on either side are skipped.
    Ties go to the lowest feature index, then the lowest threshold.
    Returns None when nothing decreases impurity.
    """
    X = np.ascontiguousarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = np.ascontiguousarray(y, dtype=np.int64)
    n = X.shape[0]
    if n < 2:
        return None
    w = np.ones(n) if weights is None else np.ascontiguousarray(weights, dtype=float)
    if np.any(w <= 0):
        raise DataError("sample weights must be positive")
    feats = np.arange(X.shape[1], dtype=np.int64) if features is None else np.sort(np.asarray(features, dtype=np.int64))
    return _search(X, y, w, np.arange(n, dtype=np.int64), feats, min_leaf)


def grow(X, y, params: TreeParams = TreeParams(), *, mtry: Optional[int] = None, rng=None) -> Node:
    """Grow a tree greedily from the root.

    ``mtry`` limits each split search to that many features drawn without
    replacement from ``rng`` (random-forest style); by default every
    feature is searched.
    """
    X = np.ascontiguousarray(X, dtype=float)
    y = np.ascontiguousarray(y, dtype=np.int64)
    if X.shape[0] == 0:
        raise DataError("cannot grow a tree on an empty training set")
    p = X.shape[1]
    all_feats = np.arange(p, dtype=np.int64)
    if mtry is not None and not 1 <= mtry <= p:
        raise ValueError(f"mtry must lie in [1, {p}]")
    w = np.ones(X.shape[0])
    n1 = int(y.sum())
    root_risk = min(n1, X.shape[0] - n1)

    def build(idx: np.ndarray, depth: int) -> Node:
        m = idx.shape[0]
        c1 = int(y[idx].sum())
        counts = (m - c1, c1)
        if depth >= params.max_depth or m < params.min_split or c1 == 0 or c1 == m:
            return Leaf(counts)
        if mtry is None or mtry == p:
            feats = all_feats
        else:
            feats = np.sort(rng.permutation(p)[:mtry]).astype(np.int64)
        choice = _search(X, y, w, idx, feats, params.min_leaf)
        if choice is None:
            return Leaf(counts)
        go_left = X[idx, choice.feature] < choice.threshold
        left_idx = idx[go_left]
        right_idx = idx[~go_left]
        l1 = int(y[left_idx].sum())
        r1 = c1 - l1
        left_counts = (left_idx.shape[0] - l1, l1)
        right_counts = (right_idx.shape[0] - r1, r1)
        reduction = float(risk(counts) - risk(left_counts) - risk(right_counts))
        left = build(left_idx, depth + 1)
        right = build(right_idx, depth + 1)
        # Gate on the whole surviving subtree, as rpart does: a split that
        # removes no risk itself may still enable splits below it that do.
        complexity = reduction + _complexity(left) + _complexity(right)
        if complexity / root_risk < params.cp:
            return Leaf(counts)
        return Split(
            feature=choice.feature,
            threshold=choice.threshold,
            left=left,
            right=right,
            counts=counts,
            risk_reduction=reduction,
            complexity=complexity,
            impurity_decrease=choice.decrease,
        )

    return build(np.arange(X.shape[0], dtype=np.int64), 0)


def _complexity(node: Node) -> float:
    return node.complexity if isinstance(node, Split) else 0.0


def prune(tree: Node, cp: float, root_risk: Optional[float] = None) -> Node:
    """Collapse every subtree whose total risk reduction, relative to the
    root risk, falls below ``cp``. ``cp >= 1`` always leaves only the root.

    Subtree totals are the values recorded at growth time, so pruning an
    already pruned tree again gives the same result as pruning once at the
    larger cp.
    """
    if isinstance(tree, Leaf):
        return tree
    if root_risk is None:
        root_risk = risk(tree.counts)
    if cp >= 1.0 or root_risk <= 0:
        return Leaf(tree.counts)

    def walk(node: Node) -> Node:
        if isinstance(node, Leaf):
            return node
        if node.complexity / root_risk < cp:
            return Leaf(node.counts)
        left = walk(node.left)
        right = walk(node.right)
        if left is node.left and right is node.right:
            return node
        return replace(node, left=left, right=right)

    return walk(tree)


def node_count(node: Node) -> int:
    if isinstance(node, Leaf):
        return 1
    return 1 + node_count(node.left) + node_count(node.right)


def depth(node: Node) -> int:
    if isinstance(node, Leaf):
        return 0
    return 1 + max(depth(node.left), depth(node.right))


def leaves(node: Node):
    if isinstance(node, Leaf):
        yield node
    else:
        yield from leaves(node.left)
        yield from leaves(node.right)


def predict(tree: Node, x) -> tuple[int, float]:
    node = tree
    while isinstance(node, Split):
        node = node.left if x[node.feature] < node.threshold else node.right
    return node.predicted, node.score


@dataclass(frozen=True)
class FlatTree:
    """Array form of a tree for fast batch prediction."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    score: np.ndarray
    predicted: np.ndarray


def flatten(tree: Node) -> FlatTree:
    feature, threshold, left, right, score, predicted = [], [], [], [], [], []

    def visit(node: Node) -> int:
        i = len(feature)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        if isinstance(node, Leaf):
            score.append(node.score)
            predicted.append(node.predicted)
            return i
        score.append(0.0)
        predicted.append(0)
        feature[i] = node.feature
        threshold[i] = node.threshold
        left[i] = visit(node.left)
        right[i] = visit(node.right)
        return i

    visit(tree)
    return FlatTree(
        np.array(feature, dtype=np.int64),
        np.array(threshold, dtype=float),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
        np.array(score, dtype=float),
        np.array(predicted, dtype=np.int64),
    )


@njit(cache=True)
def _route(feature, threshold, left, right, X):
    out = np.empty(X.shape[0], dtype=np.int64)
    for i in range(X.shape[0]):
        k = 0
        while feature[k] >= 0:
            if X[i, feature[k]] < threshold[k]:
                k = left[k]
            else:
                k = right[k]
        out[i] = k
    return out


def predict_flat(flat: FlatTree, X) -> tuple[np.ndarray, np.ndarray]:
    X = np.ascontiguousarray(np.atleast_2d(X), dtype=float)
    k = _route(flat.feature, flat.threshold, flat.left, flat.right, X)
    return flat.predicted[k], flat.score[k]


def predict_many(tree: Node, X) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized ``predict``: (classes, scores) for every row of X."""
    return predict_flat(flatten(tree), X)


def render(tree: Node, feature_names=FEATURE_NAMES) -> str:
    """Indented text view, one line per node in pre-order (left child first)."""
    lines = []

    def visit(node: Node, level: int) -> None:
        pad = "  " * level
        if isinstance(node, Leaf):
            lines.append(f"{pad}class={node.predicted} ({node.counts[0]}, {node.counts[1]})")
        else:
            lines.append(f"{pad}{feature_names[node.feature]} < {float(node.threshold)!r}")
            visit(node.left, level + 1)
            visit(node.right, level + 1)

    visit(tree, 0)
    return "\n".join(lines) + "\n"


def node_to_dict(node: Node) -> dict:
    if isinstance(node, Leaf):
        return {"counts": list(node.counts)}
    return {
        "feature": node.feature,
        "threshold": node.threshold,
        "counts": list(node.counts),
        "risk_reduction": node.risk_reduction,
        "complexity": node.complexity,
        "impurity_decrease": node.impurity_decrease,
        "left": node_to_dict(node.left),
        "right": node_to_dict(node.right),
    }


def node_from_dict(d: dict) -> Node:
    try:
        counts = (int(d["counts"][0]), int(d["counts"][1]))
        if "feature" not in d:
            return Leaf(counts)
        return Split(
            feature=int(d["feature"]),
            threshold=float(d["threshold"]),
            left=node_from_dict(d["left"]),
            right=node_from_dict(d["right"]),
            counts=counts,
            risk_reduction=float(d.get("risk_reduction", 0.0)),
            complexity=float(d.get("complexity", 0.0)),
            impurity_decrease=float(d.get("impurity_decrease", 0.0)),
        )
    except (KeyError, TypeError, IndexError) as exc:
        raise SchemaError(f"malformed tree node: {exc}") from None


@dataclass(frozen=True)
class DecisionTree:
    """A grown tree together with the parameters that produced it.

    ``prune_cp`` is the cp the stored root was pruned at (None if unpruned).
    """

    root: Node
    params: TreeParams = TreeParams()
    prune_cp: Optional[float] = None

    @classmethod
    def fit(cls, X, y, params: TreeParams = TreeParams(), prune_cp: Optional[float] = None) -> "DecisionTree":
        root = grow(X, y, params)
        if prune_cp is not None:
            root = prune(root, prune_cp)
        return cls(root, params, prune_cp)

    def predict(self, X) -> tuple[np.ndarray, np.ndarray]:
        return predict_many(self.root, X)

    def render(self) -> str:
        return render(self.root)

    def to_dict(self) -> dict:
        return {
            "version": TREE_FORMAT_VERSION,
            "params": asdict(self.params),
            "prune_cp": self.prune_cp,
            "root": node_to_dict(self.root),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DecisionTree":
        if d.get("version") != TREE_FORMAT_VERSION:
            raise SchemaError(f"tree format version {d.get('version')!r}, expected {TREE_FORMAT_VERSION}")
        return cls(node_from_dict(d["root"]), TreeParams(**d["params"]), d.get("prune_cp"))
