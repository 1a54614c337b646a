"""Acceptance criteria, one test each; every test prints a PASS/FAIL line."""

import time
from fractions import Fraction

import numpy as np
import pytest

from ejetml import cart
from ejetml.baselines import cross_entropy_grad
from ejetml.cli import main
from ejetml.ensembles import BoostParams, ForestParams, feature_importance, fit_adaboost, fit_forest
from ejetml.errors import DataError
from ejetml.metrics import SWAPPED, ConfusionMatrix, accuracy, auc, f1, kappa, precision, recall, roc_curve
from ejetml.models import ModelSpec
from ejetml.synthgen import GeneratorConfig, generate
from ejetml.validation import cross_validate, make_folds, pooled_report

from oracles import (
    TABLE_DEFAULT,
    TABLE_HIGHLY_PRUNED,
    TABLE_PRUNED,
    brute_split,
    central_diff,
    exact_metrics,
    loss_ref,
    mann_whitney,
)


@pytest.fixture
def verdict(pytestconfig):
    capman = pytestconfig.pluginmanager.getplugin("capturemanager")

    def emit(label: str, ok: bool, detail: str = "") -> None:
        with capman.global_and_fixture_disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} {label}{': ' + detail if detail else ''}")
        assert ok, detail

    return emit


# 1 ----------------------------------------------------------------------


def _cm(table):
    return ConfusionMatrix.from_table(table)


def test_c1_metric_oracle_exact(verdict):
    t0 = time.perf_counter()
    d, p, h = _cm(TABLE_DEFAULT), _cm(TABLE_PRUNED), _cm(TABLE_HIGHLY_PRUNED)
    ex = exact_metrics(TABLE_DEFAULT)
    got = {
        "default accuracy": (accuracy(d), ex["accuracy"]),
        "default kappa": (kappa(d), ex["kappa"]),
        "default f1": (f1(d), ex["f1"]),
        "default precision": (precision(d), ex["precision"]),
        "default recall": (recall(d), ex["recall"]),
        "pruned accuracy": (accuracy(p), Fraction(203, 239)),
        "highly pruned accuracy": (accuracy(h), Fraction(186, 239)),
    }
    worst = max(abs(v - float(e)) for v, e in got.values())
    # the listed six-digit figures are the exact cell-derived values rounded
    printed = {"default accuracy": 0.866109, "default f1": 0.802469, "default precision": 0.844156,
               "default recall": 0.764706, "pruned accuracy": 0.849372, "highly pruned accuracy": 0.778243}
    rounding_ok = all(round(got[k][0], 6) == v for k, v in printed.items())
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-9 and rounding_ok and elapsed < 1.0
    verdict("criterion 1 metric oracle", ok,
            f"max |metric - exact| = {worst:.2e}, six-digit figures match = {rounding_ok}, {elapsed * 1e3:.1f} ms")


@pytest.mark.xfail(strict=True, reason="listed kappa 0.701581 differs from the cell-derived 4495/6407 = 0.7015764")
def test_c1_kappa_listed_figure(verdict):
    k = kappa(_cm(TABLE_DEFAULT))
    verdict("criterion 1 listed kappa 0.701581", abs(k - 0.701581) <= 1e-9, f"computed {k:.10f}")


# 2 ----------------------------------------------------------------------


def test_c2_f1_swap_invariance(verdict):
    rng = np.random.default_rng(2)
    worst, undefined_mismatch = 0.0, 0
    for _ in range(1000):
        c = rng.integers(0, 50, size=4)
        if c.sum() == 0:
            c[0] = 1
        cm = ConfusionMatrix(*map(int, c))
        a, b = f1(cm), f1(cm, SWAPPED)
        if (a is None) != (b is None):
            undefined_mismatch += 1
        elif a is not None:
            worst = max(worst, abs(a - b))
    verdict("criterion 2 f1 swap invariance", worst <= 1e-12 and undefined_mismatch == 0,
            f"1000 matrices, max difference {worst:.1e}")


# 3 ----------------------------------------------------------------------


def test_c3_split_oracle(verdict):
    rng = np.random.default_rng(3)
    t0 = time.perf_counter()
    mismatches = 0
    for _ in range(100):
        n = int(rng.integers(2, 13))
        X = rng.integers(0, 5, size=(n, 3)).astype(float)
        y = rng.integers(0, 2, size=n)
        got = cart.best_split(X, y)
        ref = brute_split(X, y)
        if ref is None:
            mismatches += got is not None
        elif got is None or (got.feature, got.threshold) != ref[:2] or abs(got.decrease - ref[2]) > 1e-12:
            mismatches += 1
    elapsed = time.perf_counter() - t0
    verdict("criterion 3 split oracle", mismatches == 0 and elapsed < 5.0,
            f"100 datasets, {mismatches} mismatches, {elapsed:.2f} s")


# 4 ----------------------------------------------------------------------


def test_c4_pruning_laws(verdict):
    grid = [0.0, 0.01, 0.05, 0.2, 1.0]
    rng = np.random.default_rng(4)
    loose = cart.TreeParams(min_split=2, min_leaf=1, cp=0.0)
    failures = []
    for i in range(50):
        n = int(rng.integers(30, 120))
        X = rng.integers(0, 8, size=(n, 3)).astype(float)
        y = (X[:, 0] + rng.normal(0, 2, n) > 4).astype(int)
        t = cart.grow(X, y, loose)
        sizes = [cart.node_count(cart.prune(t, cp)) for cp in grid]
        if sizes != sorted(sizes, reverse=True):
            failures.append((i, "monotone"))
        if cart.prune(t, 0.0) != t:
            failures.append((i, "identity"))
        if not isinstance(cart.prune(t, 1.0), cart.Leaf):
            failures.append((i, "cp=1"))
        for a in grid:
            for b in grid:
                if cart.prune(cart.prune(t, a), b) != cart.prune(t, max(a, b)):
                    failures.append((i, "idempotence"))
    verdict("criterion 4 pruning laws", not failures, f"50 trees, failures {failures[:3]}")


# 5 ----------------------------------------------------------------------


def test_c5_auc_oracle(verdict):
    rng = np.random.default_rng(5)
    worst = 0.0
    for i in range(200):
        n = int(rng.integers(2, 51))
        y = rng.integers(0, 2, size=n)
        y[0], y[-1] = 0, 1
        levels = int(rng.integers(1, 4)) if i % 2 == 0 else 1000  # heavy ties on every other set
        s = rng.integers(0, levels, size=n) / levels
        worst = max(worst, abs(auc(roc_curve(s, y)) - mann_whitney(s, y)))
    verdict("criterion 5 AUC oracle", worst <= 1e-12, f"200 sets, max difference {worst:.1e}")


# 6 ----------------------------------------------------------------------


def test_c6_gradient_check(verdict):
    rng = np.random.default_rng(6)
    worst = 0.0
    for _ in range(20):
        n = int(rng.integers(5, 60))
        Z = rng.normal(size=(n, 3))
        y = rng.integers(0, 2, size=n).astype(float)
        theta = rng.normal(scale=1.5, size=4)
        gw, gb = cross_entropy_grad(theta[:3], theta[3], Z, y)
        numeric = central_diff(lambda t: loss_ref(t[:3], t[3], Z, y), theta, h=1e-5)
        rel = np.linalg.norm(np.r_[gw, gb] - numeric) / max(np.linalg.norm(numeric), 1e-12)
        worst = max(worst, rel)
    verdict("criterion 6 gradient check", worst <= 1e-5, f"20 probes, max relative error {worst:.1e}")


# 7 ----------------------------------------------------------------------


def test_c7_adaboost_bound(verdict):
    rng = np.random.default_rng(7)
    fits, problems = 0, []
    datasets = [(generate(GeneratorConfig(seed=s)).X, generate(GeneratorConfig(seed=s)).y) for s in range(20)]
    for _ in range(180):
        n = int(rng.integers(4, 80))
        X = rng.integers(0, 6, size=(n, 3)).astype(float)
        y = rng.integers(0, 2, size=n)
        y[0], y[1] = 0, 1
        datasets.append((X, y))
    for X, y in datasets:
        for rounds in (1, 5, 20):
            sums = []
            try:
                m = fit_adaboost(X, y, BoostParams(n_stumps=rounds), on_round=lambda t, w: sums.append(w.sum()))
            except DataError:
                continue  # nothing beats chance: no model to check
            fits += 1
            err = float(np.mean(m.predict(X)[0] != y))
            if err > m.error_bound() + 1e-12:
                problems.append(f"bound {err} > {m.error_bound()}")
            if not all(e < 0.5 for e in m.training_errors):
                problems.append("epsilon >= 0.5 accepted")
            if any(abs(s - 1.0) > 1e-12 for s in sums):
                problems.append("weights not normalized")
    verdict("criterion 7 AdaBoost bound", not problems and fits > 500, f"{fits} fits, problems {problems[:3]}")


# 8 ----------------------------------------------------------------------

SEEDS = range(100)


@pytest.fixture(scope="module")
def directional_runs():
    t0 = time.perf_counter()
    runs = []
    for seed in SEEDS:
        ds = generate(GeneratorConfig(seed=seed))
        X, y = ds.X, ds.y
        forest = fit_forest(X, y, ForestParams(seed=seed))
        importance = feature_importance(forest)
        plan = make_folds((X, y), 10, seed)
        rf = cross_validate(ModelSpec("forest"), (X, y), 10, seed, plan=plan)
        lr = cross_validate(ModelSpec("logreg"), (X, y), 10, seed, plan=plan)
        tree_cv = cross_validate(ModelSpec("tree"), (X, y), 10, seed, plan=plan)
        root = cart.grow(X, y)
        runs.append({
            "speed_first": int(np.argmax(importance)) == 0,
            "rf_auc": pooled_report(ModelSpec("forest"), rf, y).auc,
            "lr_auc": pooled_report(ModelSpec("logreg"), lr, y).auc,
            "tree_acc": tree_cv.mean["accuracy"],
            "root_speed": isinstance(root, cart.Split) and root.feature == 0,
        })
    return runs, time.perf_counter() - t0


def test_c8a_importance_speed_first(verdict, directional_runs):
    runs, _ = directional_runs
    hits = sum(r["speed_first"] for r in runs)
    verdict("criterion 8a importance ranks nozzle speed first", hits >= 95, f"{hits}/100 runs")


def test_c8b_forest_beats_logreg_auc(verdict, directional_runs):
    runs, _ = directional_runs
    hits = sum(r["rf_auc"] > r["lr_auc"] for r in runs)
    rf = np.mean([r["rf_auc"] for r in runs])
    lr = np.mean([r["lr_auc"] for r in runs])
    verdict("criterion 8b forest AUC above logistic regression", hits >= 80,
            f"{hits}/100 runs, mean AUC {rf:.3f} vs {lr:.3f}")


def test_c8c_tree_cv_accuracy_range(verdict, directional_runs):
    runs, _ = directional_runs
    accs = [r["tree_acc"] for r in runs]
    hits = sum(0.65 <= a <= 0.95 for a in accs)
    verdict("criterion 8c tree CV accuracy in [0.65, 0.95]", hits >= 95,
            f"{hits}/100 runs, range {min(accs):.3f}-{max(accs):.3f}")


def test_c8d_root_is_speed(verdict, directional_runs):
    runs, _ = directional_runs
    hits = sum(r["root_speed"] for r in runs)
    verdict("criterion 8d root split on nozzle speed", hits >= 95, f"{hits}/100 runs")


def test_c8_runtime(verdict, directional_runs):
    _, elapsed = directional_runs
    verdict("criterion 8 runtime under 10 min", elapsed < 600, f"{elapsed:.1f} s")


# 9, 10 ------------------------------------------------------------------


@pytest.fixture(scope="module")
def two_reports(tmp_path_factory):
    base = tmp_path_factory.mktemp("reports")
    times = []
    for name in ("a", "b"):
        t0 = time.perf_counter()
        code = main(["report", "--gen", "--seed", "42", "--out", str(base / name)])
        times.append(time.perf_counter() - t0)
        assert code == 0
    return base / "a", base / "b", times


def test_c9_report_deterministic(verdict, two_reports):
    a, b, _ = two_reports
    files = sorted(p.name for p in a.iterdir() if p.suffix in (".csv", ".json"))
    differ = [n for n in files if (a / n).read_bytes() != (b / n).read_bytes()]
    same_set = files == sorted(p.name for p in b.iterdir() if p.suffix in (".csv", ".json"))
    verdict("criterion 9 report determinism", not differ and same_set and len(files) >= 10,
            f"{len(files)} CSV/JSON files compared, {len(differ)} differ")


def test_c10_report_budget(verdict, two_reports):
    _, _, times = two_reports
    verdict("criterion 10 report under 60 s", max(times) < 60, f"{max(times):.1f} s")
