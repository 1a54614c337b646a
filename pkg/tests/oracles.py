"""Slow, obviously-correct reference implementations used by the tests."""

from fractions import Fraction
from itertools import product

import numpy as np

# Published confusion cells as [[tn, fp], [fn, tp]].
TABLE_DEFAULT = [[142, 12], [20, 65]]
TABLE_PRUNED = [[149, 5], [31, 54]]
TABLE_HIGHLY_PRUNED = [[125, 29], [24, 61]]


def exact_metrics(table):
    (tn, fp), (fn, tp) = table
    n = tn + fp + fn + tp
    acc = Fraction(tn + tp, n)
    prec = Fraction(tp, tp + fp)
    rec = Fraction(tp, tp + fn)
    f1 = 2 * prec * rec / (prec + rec)
    rand = Fraction((tn + fp) * (tn + fn) + (fn + tp) * (fp + tp), n * n)
    kappa = (acc - rand) / (1 - rand)
    return {"accuracy": acc, "precision": prec, "recall": rec, "f1": f1, "random": rand, "kappa": kappa}


def gini_ref(labels, weights):
    """Exact Gini impurity over rational weights."""
    tot = sum(weights, Fraction(0))
    p1 = sum((w for l, w in zip(labels, weights) if l == 1), Fraction(0)) / tot
    return 1 - p1 * p1 - (1 - p1) * (1 - p1)


def brute_split(X, y, w=None, min_leaf=1):
    """Every feature and every midpoint in ascending order, in exact
    arithmetic; the first strictly larger decrease wins."""
    X = np.asarray(X, dtype=float)
    n = len(y)
    w = [Fraction(1)] * n if w is None else [Fraction(float(v)) for v in w]
    parent = gini_ref(list(y), w)
    W = sum(w, Fraction(0))
    best = None
    for f in range(X.shape[1]):
        vals = sorted(set(X[:, f].tolist()))
        for a, b in zip(vals, vals[1:]):
            t = (a + b) / 2
            left = [i for i in range(n) if X[i, f] < t]
            right = [i for i in range(n) if X[i, f] >= t]
            if len(left) < min_leaf or len(right) < min_leaf:
                continue
            wl = sum((w[i] for i in left), Fraction(0))
            wr = sum((w[i] for i in right), Fraction(0))
            child = (wl * gini_ref([y[i] for i in left], [w[i] for i in left])
                     + wr * gini_ref([y[i] for i in right], [w[i] for i in right])) / W
            d = parent - child
            if d > 0 and (best is None or d > best[2]):
                best = (f, t, d)
    return None if best is None else (best[0], best[1], float(best[2]))


def mann_whitney(scores, labels):
    pos = [s for s, l in zip(scores, labels) if l == 1]
    neg = [s for s, l in zip(scores, labels) if l == 0]
    wins = 0.0
    for p, q in product(pos, neg):
        wins += 1.0 if p > q else 0.5 if p == q else 0.0
    return wins / (len(pos) * len(neg))


def loss_ref(w, b, Z, y):
    """Cross-entropy through the plain logistic formula."""
    z = Z @ w + b
    p = 1.0 / (1.0 + np.exp(-z))
    return float(-np.mean(y * np.log(p) + (1 - y) * np.log(1 - p)))


def central_diff(f, theta, h=1e-5):
    g = np.zeros_like(theta)
    for i in range(theta.size):
        e = np.zeros_like(theta)
        e[i] = h
        g[i] = (f(theta + e) - f(theta - e)) / (2 * h)
    return g
