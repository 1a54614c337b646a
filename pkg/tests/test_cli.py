import json

import numpy as np
import pytest

from ejetml.cli import main
from ejetml.dataset import load_csv
from ejetml.models import FittedModel


@pytest.fixture
def data(tmp_path):
    path = tmp_path / "data.csv"
    assert main(["gen", "--n", "240", "--seed", "7", "--out", str(path)]) == 0
    return path


def test_gen(tmp_path, data):
    assert len(load_csv(data)) == 240
    cfg = json.loads(data.with_suffix(".config.json").read_text())
    assert cfg["seed"] == 7 and cfg["n"] == 240
    again = tmp_path / "again.csv"
    main(["gen", "--n", "240", "--seed", "7", "--out", str(again)])
    assert again.read_bytes() == data.read_bytes()
    raw = data.read_bytes()
    assert b"\r" not in raw


def test_gen_full_grid(tmp_path):
    path = tmp_path / "grid.csv"
    assert main(["gen", "--noise-sigma", "0", "--full-grid", "--out", str(path)]) == 0
    ds = load_csv(path)
    assert len(ds) == 72


def test_train_and_eval(tmp_path, data, capsys):
    tree = tmp_path / "tree.json"
    knn = tmp_path / "knn.json"
    forest = tmp_path / "forest.json"
    assert main(["train", "--data", str(data), "--model", "tree", "--cp", "0.2", "--out", str(tree)]) == 0
    out = capsys.readouterr().out
    assert "train: n=240 accuracy=" in out
    assert FittedModel.from_json(tree.read_text()).spec.label == "tree(cp=0.2)"
    assert main(["train", "--data", str(data), "--model", "knn", "--k", "10", "--out", str(knn)]) == 0
    assert FittedModel.from_json(knn.read_text()).model.k == 10
    for _ in range(2):
        main(["train", "--data", str(data), "--model", "forest", "--trees", "100", "--seed", "1", "--out", str(forest)])
        first = forest.read_bytes() if _ == 0 else first
    assert forest.read_bytes() == first
    capsys.readouterr()
    roc = tmp_path / "roc.csv"
    models = [str(p) for p in (tree, knn, forest, tree)]
    assert main(["eval", "--model", *models, "--data", str(data)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "model,accuracy,misclassification,f1,auc,kappa,recall"
    assert [l.split(",")[0] for l in lines[1:]] == ["tree(cp=0.2)", "knn(k=10)", "forest(n=100)", "tree(cp=0.2)"]
    assert main(["eval", "--model", str(forest), "--data", str(data), "--roc", str(roc), "--format", "json"]) == 0
    assert json.loads(capsys.readouterr().out)[0]["accuracy"] > 0.8
    assert roc.read_text().splitlines()[0] == "fpr,tpr"


def test_train_with_test_fraction(tmp_path, data, capsys):
    out = tmp_path / "m.json"
    assert main(["train", "--data", str(data), "--model", "logreg", "--test-fraction", "0.2", "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "train: n=192" in text and "test: n=48" in text


def test_eval_constant_model(tmp_path, capsys):
    rows = ["nozzle_speed_mm_min,voltage_kv,flow_rate_ul_min,resistance_ohm_sqr,class"]
    rows += ["300,2,15,,0"] * 154 + ["300,2,15,,1"] * 85
    data = tmp_path / "d.csv"
    data.write_text("\n".join(rows) + "\n")
    model = tmp_path / "c.json"
    assert main(["train", "--data", str(data), "--model", "constant", "--out", str(model)]) == 0
    capsys.readouterr()
    assert main(["eval", "--model", str(model), "--data", str(data), "--format", "json"]) == 0
    rep = json.loads(capsys.readouterr().out)[0]
    assert rep["accuracy"] == pytest.approx(154 / 239)
    assert rep["kappa"] == 0.0


def test_perfect_model_row(tmp_path, capsys):
    data = tmp_path / "grid.csv"
    main(["gen", "--noise-sigma", "0", "--full-grid", "--out", str(data)])
    model = tmp_path / "k1.json"
    main(["train", "--data", str(data), "--model", "knn", "--k", "1", "--out", str(model)])
    capsys.readouterr()
    main(["eval", "--model", str(model), "--data", str(data)])
    assert capsys.readouterr().out.splitlines()[1].split(",")[1] == "1"


def test_sweep(tmp_path, data, capsys):
    a, b, svg = tmp_path / "a.csv", tmp_path / "b.csv", tmp_path / "s.svg"
    args = ["sweep", "--kind", "cp", "--values", "0,0.01,0.05,0.1,0.2", "--data", str(data), "--out"]
    assert main(args + [str(a), "--svg", str(svg)]) == 0
    assert main(args + [str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert len(a.read_text().splitlines()) == 6
    assert svg.read_text().startswith("<svg") and "polyline" in svg.read_text()
    trees = tmp_path / "t.csv"
    assert main(["sweep", "--kind", "trees", "--values", "1,5,10,15,20", "--data", str(data), "--out", str(trees)]) == 0
    lines = trees.read_text().splitlines()
    assert lines[0] == "n_trees,mean_accuracy,sd" and len(lines) == 6


def test_predict(tmp_path, data, capsys):
    model = tmp_path / "tree.json"
    main(["train", "--data", str(data), "--model", "tree", "--out", str(model)])
    fitted = FittedModel.from_json(model.read_text())
    root = fitted.model.root
    assert root.feature == 0 and root.threshold <= 700
    capsys.readouterr()
    assert main(["predict", "--model", str(model), "--speed", "700", "--voltage", "2", "--flow", "15"]) == 0
    out = capsys.readouterr().out.splitlines()
    # every sample at 700 mm/min lands in a class-0 leaf on this data
    assert out[-1] == "NO-GO" and out[0].startswith("class=0")
    batch = tmp_path / "batch.csv"
    batch.write_text("nozzle_speed_mm_min,voltage_kv,flow_rate_ul_min\n300,2,15\n700,1,3\n500,3,9\n")
    res = tmp_path / "pred.csv"
    assert main(["predict", "--model", str(model), "--in", str(batch), "--out", str(res)]) == 0
    rows = res.read_text().splitlines()
    assert len(rows) == 4
    assert [r.split(",")[0] for r in rows[1:]] == ["300", "700", "500"]
    for r in rows[1:]:
        cls, score, gate = r.split(",")[3:]
        assert 0 <= float(score) <= 1 and gate == ("GO" if cls == "1" else "NO-GO")


def test_exit_codes(tmp_path, data, capsys):
    model = tmp_path / "m.json"
    main(["train", "--data", str(data), "--model", "tree", "--out", str(model)])
    assert main(["predict", "--model", str(model), "--speed", "300"]) == 1
    with pytest.raises(SystemExit) as err:
        main(["train", "--data", str(data), "--model", "svm", "--out", str(model)])
    assert err.value.code == 1
    with pytest.raises(SystemExit) as err:
        main([])
    assert err.value.code == 1
    bad = tmp_path / "bad.csv"
    bad.write_text("nozzle_speed_mm_min,voltage_kv\n1,2\n")
    assert main(["train", "--data", str(bad), "--model", "tree", "--out", str(model)]) == 2
    assert main(["train", "--data", str(tmp_path / "missing.csv"), "--model", "tree", "--out", str(model)]) == 2
    doc = json.loads(model.read_text())
    doc["version"] = 9
    model.write_text(json.dumps(doc))
    assert main(["eval", "--model", str(model), "--data", str(data)]) == 2
    assert "expected 1" in capsys.readouterr().err
    assert main(["train", "--data", str(data), "--model", "logreg", "--lr", "inf", "--out", str(model)]) == 3


def test_report_contents(tmp_path):
    out = tmp_path / "rep"
    assert main(["report", "--gen", "--seed", "42", "--out", str(out)]) == 0
    names = {p.name for p in out.iterdir()}
    for required in ("comparison.csv", "feature_importance.csv", "sweep_cp.csv", "sweep_trees.csv",
                     "manifest.json", "confusion_trees.csv"):
        assert required in names
    assert sum(n.startswith("roc_") and n.endswith(".csv") for n in names) == 4
    assert len(names) >= 10
    assert not any(n.startswith(".") for n in names)
    header = (out / "comparison.csv").read_text().splitlines()[0]
    assert header == "model,accuracy,misclassification,f1,auc,kappa,recall"
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["seed"] == 42
    imp = np.array([float(l.split(",")[1]) for l in (out / "feature_importance.csv").read_text().splitlines()[1:]])
    assert imp.argmax() == 0
