"""Command-line pipeline: gen, train, eval, sweep, predict, report.

Exit codes: 0 success, 1 usage, 2 data/schema problems, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import platform
import sys
from pathlib import Path

import numpy as np

from . import __version__, cart
from .artifacts import atomic_write, line_chart
from .dataset import (
    CSV_COLUMNS,
    DEFAULT_THRESHOLD,
    Dataset,
    dataset_to_csv,
    label_by_threshold,
    load_csv,
    stratified_split,
)
from .ensembles import feature_importance
from .errors import DataError, EjetError, NumericError
from .metrics import CONVENTIONAL, SWAPPED, evaluate, format_real, reports_to_csv
from .models import MODEL_NAMES, FittedModel, ModelSpec, fit_model
from .synthgen import GeneratorConfig, generate
from .validation import cross_validate, pooled_report, sweep_cp, sweep_ntrees

log = logging.getLogger("ejetml")

DEFAULT_SEED = 42
EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 1, 2, 3
DEFAULT_CP_VALUES = "0,0.01,0.05,0.1,0.2"
DEFAULT_TREE_COUNTS = "1,5,10,15,20"


class UsageError(EjetError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _load_dataset(path, threshold: float) -> Dataset:
    ds = load_csv(path)
    return label_by_threshold(ds, threshold) if not ds.is_labeled else ds


def _emit(text: str, out) -> None:
    if out:
        atomic_write(out, text)
    else:
        sys.stdout.write(text)


def _spec_from_args(args) -> ModelSpec:
    overrides = {}
    if args.model == "tree":
        overrides = {
            "cp": args.cp,
            "grow_cp": args.grow_cp,
            "min_split": args.min_split,
            "min_leaf": args.min_leaf,
            "max_depth": args.max_depth,
        }
    elif args.model == "forest":
        overrides = {"n_trees": args.trees, "mtry": args.mtry}
    elif args.model == "knn":
        overrides = {"k": args.k}
    elif args.model == "logreg":
        overrides = {"lr": args.lr, "max_epochs": args.max_epochs, "tol": args.tol}
    elif args.model == "adaboost":
        overrides = {"n_stumps": args.stumps if args.stumps is not None else args.trees}
    return ModelSpec(args.model, {k: v for k, v in overrides.items() if v is not None})


# ---------------------------------------------------------------- gen


def cmd_gen(args) -> int:
    if args.config:
        cfg = GeneratorConfig.from_json(Path(args.config).read_text(encoding="utf-8"))
    else:
        cfg = GeneratorConfig()
    changes = {
        "n": args.n,
        "seed": args.seed,
        "noise_sigma": args.noise_sigma,
        "threshold": args.threshold,
        "full_grid": args.full_grid or None,
    }
    cfg_dict = {**json.loads(cfg.to_json()), **{k: v for k, v in changes.items() if v is not None}}
    cfg = GeneratorConfig(**cfg_dict)
    ds = generate(cfg)
    out = Path(args.out)
    atomic_write(out, dataset_to_csv(ds))
    atomic_write(out.with_suffix(".config.json"), cfg.to_json())
    print(f"wrote {len(ds)} samples to {out} (seed {cfg.seed})")
    return 0


# ---------------------------------------------------------------- train


def _train_summary(model: FittedModel, X, y, tag: str) -> str:
    pred, score = model.predict(X)
    rep = evaluate(model.spec.label, y, pred, score)
    return (
        f"{tag}: n={len(y)} accuracy={format_real(rep.accuracy)} f1={format_real(rep.f1)} "
        f"kappa={format_real(rep.kappa)} auc={format_real(rep.auc)}"
    )


def cmd_train(args) -> int:
    ds = _load_dataset(args.data, args.threshold)
    ds.require_trainable()
    spec = _spec_from_args(args)
    train, test = ds, None
    if args.test_fraction is not None:
        train, test = stratified_split(ds, args.test_fraction, args.seed)
    model = fit_model(spec, train.X, train.y, seed=args.seed)
    atomic_write(args.out, model.to_json())
    print(f"model {spec.label} written to {args.out} (seed {args.seed})")
    print(_train_summary(model, train.X, train.y, "train"))
    if test is not None and len(test):
        print(_train_summary(model, test.X, test.y, "test"))
    if spec.name == "tree":
        sys.stdout.write(model.model.render())
    return 0


# ---------------------------------------------------------------- eval


def cmd_eval(args) -> int:
    ds = _load_dataset(args.data, args.threshold)
    ds.require_trainable()
    mode = SWAPPED if args.swapped_metrics else CONVENTIONAL
    reports = []
    for i, path in enumerate(args.model):
        model = FittedModel.from_json(Path(path).read_text(encoding="utf-8"))
        pred, score = model.predict(ds.X)
        rep = evaluate(model.spec.label, ds.y, pred, score, mode=mode)
        reports.append(rep)
        if args.roc:
            if rep.roc is None:
                raise DataError("ROC needs both classes in the evaluation data")
            roc_path = Path(args.roc)
            if len(args.model) > 1:
                roc_path = roc_path.with_name(f"{roc_path.stem}_{i}{roc_path.suffix}")
            atomic_write(roc_path, rep.roc.to_csv())
    if args.format == "json":
        text = json.dumps([r.to_dict() for r in reports], indent=2, sort_keys=True) + "\n"
    else:
        text = reports_to_csv(reports)
    _emit(text, args.out)
    return 0


# ---------------------------------------------------------------- sweep


def _sweep_dataset(args) -> Dataset:
    if args.data:
        return _load_dataset(args.data, args.threshold)
    return generate(GeneratorConfig(seed=args.seed, threshold=args.threshold))


def cmd_sweep(args) -> int:
    ds = _sweep_dataset(args)
    ds.require_trainable()
    if args.kind == "cp":
        values = _float_list(args.values or DEFAULT_CP_VALUES)
        res = sweep_cp(ds, values, args.folds, args.seed)
        param, xlabel, title = "cp", "complexity parameter (cp)", "CV accuracy vs complexity parameter"
    else:
        values = _int_list(args.values or DEFAULT_TREE_COUNTS)
        res = sweep_ntrees(ds, values, args.folds, args.seed)
        param, xlabel, title = "n_trees", "number of stumps", "AdaBoost CV accuracy vs number of trees"
    if args.format == "json":
        text = json.dumps({"param": param, "values": res.values, "mean_accuracy": res.mean_accuracy,
                           "sd": res.sd}, indent=2) + "\n"
    else:
        text = res.to_csv(param)
    _emit(text, args.out)
    if args.svg:
        atomic_write(args.svg, line_chart(res.values, res.mean_accuracy, title=title, xlabel=xlabel,
                                          ylabel="mean accuracy"))
    return 0


# ---------------------------------------------------------------- predict


def _gate(cls: int) -> str:
    return "GO" if cls == 1 else "NO-GO"


def cmd_predict(args) -> int:
    model = FittedModel.from_json(Path(args.model).read_text(encoding="utf-8"))
    if args.input:
        ds = load_csv_features(args.input)
        X = ds
    else:
        missing = [n for n in ("speed", "voltage", "flow") if getattr(args, n) is None]
        if missing:
            raise UsageError(f"missing feature flag(s): {', '.join('--' + m for m in missing)} (or use --in)")
        X = np.array([[args.speed, args.voltage, args.flow]], dtype=float)
    pred, score = model.predict(X)
    if args.input:
        rows = ["nozzle_speed_mm_min,voltage_kv,flow_rate_ul_min,class,score,gate"]
        for x, c, s in zip(X, pred, score):
            rows.append(f"{x[0]:.6g},{x[1]:.6g},{x[2]:.6g},{int(c)},{s:.6g},{_gate(int(c))}")
        _emit("\n".join(rows) + "\n", args.out)
    else:
        c, s = int(pred[0]), float(score[0])
        text = f"class={c} score={s:.6g}\n{_gate(c)}\n"
        _emit(text, args.out)
    return 0


def load_csv_features(path) -> np.ndarray:
    """Feature columns of a batch CSV; outcome columns may be absent."""
    import csv

    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        cols = []
        for name in CSV_COLUMNS[:3]:
            if name not in header:
                raise DataError(f"{path}: missing column {name!r}")
            cols.append(header.index(name))
        rows = []
        for row in reader:
            if not row or all(not c.strip() for c in row):
                continue
            try:
                rows.append([float(row[i]) for i in cols])
            except (ValueError, IndexError):
                raise DataError(f"{path}: line {reader.line_num}: bad feature values") from None
    return np.asarray(rows, dtype=float).reshape(-1, 3)


# ---------------------------------------------------------------- report

REPORT_MODELS = (
    ("tree", ModelSpec("tree")),
    ("tree_cp0.05", ModelSpec("tree", {"cp": 0.05})),
    ("tree_cp0.2", ModelSpec("tree", {"cp": 0.2})),
    ("forest", ModelSpec("forest")),
    ("logreg", ModelSpec("logreg")),
    ("knn3", ModelSpec("knn", {"k": 3})),
    ("knn10", ModelSpec("knn", {"k": 10})),
    ("adaboost", ModelSpec("adaboost", {"n_stumps": 10})),
)
ROC_MODELS = ("forest", "logreg", "knn3", "knn10")


class _Stage:
    def __init__(self, name: str):
        self.name = name

    def __enter__(self):
        log.info("report stage: %s", self.name)
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc is not None and isinstance(exc, EjetError):
            exc.args = (f"stage {self.name}: {exc.args[0] if exc.args else exc}",) + exc.args[1:]
        return False


def run_report(out_dir, ds: Dataset, seed: int, folds: int, threshold: float,
               gen_cfg: GeneratorConfig | None = None) -> list[Path]:
    out = Path(out_dir)
    written: list[Path] = []

    def write(name: str, text: str) -> None:
        written.append(atomic_write(out / name, text))

    with _Stage("data"):
        if gen_cfg is not None:
            write("data.csv", dataset_to_csv(ds))
            write("data.config.json", gen_cfg.to_json())
        ds.require_trainable()
        X, y = ds.X, ds.y

    reports, cms = [], []
    for key, spec in REPORT_MODELS:
        with _Stage(f"cv:{key}"):
            cv = cross_validate(spec, (X, y), folds, seed)
            rep = pooled_report(spec, cv, y)
            reports.append((key, spec, cv, rep))
            if key in ROC_MODELS:
                write(f"roc_{key}.csv", rep.roc.to_csv())
                write(f"roc_{key}.svg", line_chart(
                    rep.roc.fpr.tolist(), rep.roc.tpr.tolist(),
                    title=f"ROC {spec.label} (AUC={rep.auc:.3f})", xlabel="false positive rate",
                    ylabel="true positive rate", x_range=(0, 1), y_range=(0, 1), diagonal=True))
    with _Stage("comparison"):
        write("comparison.csv", reports_to_csv([r for _, _, _, r in reports]))
        summary = {
            key: {"pooled": rep.to_dict(), "fold_mean": cv.mean, "fold_sd": cv.sd}
            for key, _, cv, rep in reports
        }
        write("comparison.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")

    with _Stage("trees"):
        rows = ["model,evaluation,tn,fp,fn,tp"]
        for key, spec, _, rep in reports[:3]:
            fitted = fit_model(spec, X, y, seed=seed)
            write(f"{key}.txt", fitted.model.render())
            write(f"{key}.json", fitted.to_json())
            train_rep = evaluate(spec.label, y, *fitted.predict(X))
            for tag, r in (("training", train_rep), ("cross_validated", rep)):
                cm = r.cm
                rows.append(f"{spec.label},{tag},{cm.tn},{cm.fp},{cm.fn},{cm.tp}")
        write("confusion_trees.csv", "\n".join(rows) + "\n")

    with _Stage("importance"):
        forest = fit_model(ModelSpec("forest"), X, y, seed=seed)
        imp = feature_importance(forest.model)
        rows = ["feature,importance"] + [f"{n},{v:.6g}" for n, v in zip(ds.feature_names, imp)]
        write("feature_importance.csv", "\n".join(rows) + "\n")

    with _Stage("sweep_cp"):
        res = sweep_cp((X, y), _float_list(DEFAULT_CP_VALUES), folds, seed)
        write("sweep_cp.csv", res.to_csv("cp"))
        write("sweep_cp.svg", line_chart(res.values, res.mean_accuracy,
                                         title="CV accuracy vs complexity parameter",
                                         xlabel="complexity parameter (cp)", ylabel="mean accuracy"))
    with _Stage("sweep_trees"):
        res = sweep_ntrees((X, y), _int_list(DEFAULT_TREE_COUNTS), folds, seed)
        write("sweep_trees.csv", res.to_csv("n_trees"))
        write("sweep_trees.svg", line_chart(res.values, res.mean_accuracy,
                                            title="AdaBoost CV accuracy vs number of trees",
                                            xlabel="number of stumps", ylabel="mean accuracy"))

    with _Stage("manifest"):
        files = {
            p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in sorted(written, key=lambda p: p.name)
        }
        manifest = {
            "seed": seed,
            "folds": folds,
            "threshold": threshold,
            "n_samples": len(y),
            "class_counts": [int(np.sum(y == 0)), int(np.sum(y == 1))],
            "versions": {
                "ejetml": __version__,
                "numpy": np.__version__,
                "python": platform.python_version(),
            },
            "files": files,
        }
        write("manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return written


def cmd_report(args) -> int:
    if args.data:
        ds = _load_dataset(args.data, args.threshold)
        cfg = None
    else:
        cfg = GeneratorConfig(n=args.n, seed=args.seed, threshold=args.threshold)
        ds = generate(cfg)
    written = run_report(args.out, ds, args.seed, args.folds, args.threshold, cfg)
    print(f"wrote {len(written)} files to {args.out} (seed {args.seed})")
    return 0


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=DEFAULT_SEED, help="random seed (default 42)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD,
                        help="resistance cut (ohm/sq) for labeling; at or above is class 0")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="ejetml", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", parents=[common], help="generate a synthetic dataset")
    g.add_argument("--out", required=True)
    g.add_argument("--n", type=int)
    g.add_argument("--noise-sigma", type=float)
    g.add_argument("--full-grid", action="store_true", help="one sample per grid cell")
    g.add_argument("--config", help="GeneratorConfig JSON to start from")
    g.set_defaults(func=cmd_gen)

    t = sub.add_parser("train", parents=[common], help="fit a model and save it as JSON")
    t.add_argument("--data", required=True)
    t.add_argument("--model", required=True, choices=MODEL_NAMES)
    t.add_argument("--out", required=True)
    t.add_argument("--test-fraction", type=float)
    t.add_argument("--cp", type=float, help="tree: prune at this cp")
    t.add_argument("--grow-cp", type=float, help="tree: cp used while growing (default 0.01)")
    t.add_argument("--min-split", type=int)
    t.add_argument("--min-leaf", type=int)
    t.add_argument("--max-depth", type=int)
    t.add_argument("--trees", type=int, help="forest size (or AdaBoost rounds)")
    t.add_argument("--stumps", type=int, help="AdaBoost rounds")
    t.add_argument("--mtry", type=int)
    t.add_argument("--k", type=int)
    t.add_argument("--lr", type=float)
    t.add_argument("--max-epochs", type=int)
    t.add_argument("--tol", type=float)
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", parents=[common], help="score saved models on a labeled dataset")
    e.add_argument("--model", required=True, nargs="+")
    e.add_argument("--data", required=True)
    e.add_argument("--out")
    e.add_argument("--roc", help="write (fpr, tpr) CSV here")
    e.add_argument("--swapped-metrics", action="store_true",
                   help="use the swapped precision/recall formulas")
    e.set_defaults(func=cmd_eval)

    s = sub.add_parser("sweep", parents=[common], help="CV accuracy over cp or AdaBoost size")
    s.add_argument("--kind", required=True, choices=("cp", "trees"))
    s.add_argument("--values")
    s.add_argument("--data", help="dataset CSV (default: synthetic data at --seed)")
    s.add_argument("--folds", type=int, default=10)
    s.add_argument("--out")
    s.add_argument("--svg")
    s.set_defaults(func=cmd_sweep)

    r = sub.add_parser("predict", parents=[common], help="classify new print settings")
    r.add_argument("--model", required=True)
    r.add_argument("--speed", type=float)
    r.add_argument("--voltage", type=float)
    r.add_argument("--flow", type=float)
    r.add_argument("--in", dest="input")
    r.add_argument("--out")
    r.set_defaults(func=cmd_predict)

    rp = sub.add_parser("report", parents=[common], help="run the whole comparison pipeline")
    src = rp.add_mutually_exclusive_group()
    src.add_argument("--data")
    src.add_argument("--gen", action="store_true", help="synthesize the dataset (default)")
    rp.add_argument("--n", type=int, default=240)
    rp.add_argument("--folds", type=int, default=10)
    rp.add_argument("--out", required=True)
    rp.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"ejetml: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericError as exc:
        print(f"ejetml: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataError, OSError) as exc:
        print(f"ejetml: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"ejetml: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
