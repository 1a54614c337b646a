"""Named model specs, a uniform fit/predict surface, and model files."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from . import cart
from .baselines import KnnModel, LogregModel, fit_logreg
from .ensembles import BoostModel, BoostParams, Forest, ForestParams, fit_adaboost, fit_forest
from .errors import DataError, SchemaError

FILE_FORMAT = "ejetml-model"
FILE_VERSION = 1

DEFAULTS: dict[str, dict[str, Any]] = {
    "tree": {"min_split": 20, "min_leaf": 7, "max_depth": 30, "grow_cp": 0.01, "cp": None},
    "forest": {"n_trees": 100, "mtry": 1},
    "knn": {"k": 10},
    "logreg": {"lr": 0.1, "max_epochs": 5000, "tol": 1e-8},
    "adaboost": {"n_stumps": 10},
    "constant": {"cls": None},
}
MODEL_NAMES = tuple(DEFAULTS)


@dataclass(frozen=True)
class ModelSpec:
    """A model family plus hyperparameters; missing ones take defaults."""

    name: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.name not in DEFAULTS:
            raise ValueError(f"unknown model {self.name!r}; choose from {', '.join(MODEL_NAMES)}")
        unknown = set(self.params) - set(DEFAULTS[self.name])
        if unknown:
            raise ValueError(f"unknown parameter(s) for {self.name}: {sorted(unknown)}")

    @property
    def resolved(self) -> dict:
        return {**DEFAULTS[self.name], **self.params}

    @property
    def label(self) -> str:
        p = self.resolved
        if self.name == "tree":
            return "tree" if p["cp"] is None else f"tree(cp={p['cp']:g})"
        if self.name == "knn":
            return f"knn(k={p['k']})"
        if self.name == "adaboost":
            return f"adaboost(n={p['n_stumps']})"
        if self.name == "forest":
            return f"forest(n={p['n_trees']})"
        return self.name


@dataclass
class ConstantModel:
    cls: int
    score: float

    def predict(self, X):
        n = np.atleast_2d(X).shape[0]
        return np.full(n, self.cls, dtype=np.int64), np.full(n, self.score)

    def to_dict(self) -> dict:
        return {"version": 1, "cls": self.cls, "score": self.score}

    @classmethod
    def from_dict(cls, d: dict) -> "ConstantModel":
        return cls(int(d["cls"]), float(d["score"]))


_LOADERS = {
    "tree": cart.DecisionTree.from_dict,
    "forest": Forest.from_dict,
    "knn": KnnModel.from_dict,
    "logreg": LogregModel.from_dict,
    "adaboost": BoostModel.from_dict,
    "constant": ConstantModel.from_dict,
}


@dataclass
class FittedModel:
    spec: ModelSpec
    seed: int
    model: Any

    def predict(self, X) -> tuple[np.ndarray, np.ndarray]:
        """(classes, class-1 scores) for each row of the raw feature matrix."""
        return self.model.predict(np.atleast_2d(np.asarray(X, dtype=float)))

    def to_dict(self) -> dict:
        return {
            "format": FILE_FORMAT,
            "version": FILE_VERSION,
            "model": self.spec.name,
            "params": self.spec.resolved,
            "seed": self.seed,
            "state": self.model.to_dict(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":")) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "FittedModel":
        if d.get("format") != FILE_FORMAT:
            raise SchemaError(f"not a model file (format {d.get('format')!r}, expected {FILE_FORMAT!r})")
        if d.get("version") != FILE_VERSION:
            raise SchemaError(f"model file version {d.get('version')!r}, expected {FILE_VERSION}")
        name = d.get("model")
        if name not in _LOADERS:
            raise SchemaError(f"unknown model kind {name!r}")
        return cls(ModelSpec(name, dict(d["params"])), int(d["seed"]), _LOADERS[name](d["state"]))

    @classmethod
    def from_json(cls, text: str) -> "FittedModel":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"model file is not valid JSON: {exc}") from None
        return cls.from_dict(d)


def fit_model(spec: ModelSpec, X, y, seed: int = 42) -> FittedModel:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    if X.shape[0] == 0:
        raise DataError("cannot train on an empty dataset")
    p = spec.resolved
    if spec.name == "tree":
        params = cart.TreeParams(p["min_split"], p["min_leaf"], p["max_depth"], p["grow_cp"])
        model = cart.DecisionTree.fit(X, y, params, prune_cp=p["cp"])
    elif spec.name == "forest":
        model = fit_forest(X, y, ForestParams(n_trees=p["n_trees"], mtry=p["mtry"], seed=seed))
    elif spec.name == "knn":
        model = KnnModel.fit(X, y, p["k"])
    elif spec.name == "logreg":
        model = fit_logreg(X, y, lr=p["lr"], max_epochs=p["max_epochs"], tol=p["tol"])
    elif spec.name == "adaboost":
        model = fit_adaboost(X, y, BoostParams(n_stumps=p["n_stumps"], seed=seed))
    else:
        share = float(y.mean())
        cls = p["cls"] if p["cls"] is not None else int(share > 0.5)
        model = ConstantModel(int(cls), share)
    return FittedModel(spec, seed, model)


def parse_spec(name: str, overrides: Optional[dict] = None) -> ModelSpec:
    return ModelSpec(name, {k: v for k, v in (overrides or {}).items() if v is not None})
