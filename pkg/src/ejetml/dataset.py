"""E-jet print runs: loading, labeling, scaling and splitting."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from ._rng import make_rng
from .errors import DataError, RowError, SchemaError

FEATURE_NAMES = ("nozzle_speed", "voltage", "flow_rate")
CSV_COLUMNS = (
    "nozzle_speed_mm_min",
    "voltage_kv",
    "flow_rate_ul_min",
    "resistance_ohm_sqr",
    "class",
)
DEFAULT_THRESHOLD = 100.0


@dataclass(frozen=True)
class PrintSample:
    """One printed electrode: process settings plus its measured outcome."""

    nozzle_speed: float
    voltage: float
    flow_rate: float
    resistance: Optional[float] = None
    label: Optional[int] = None

    def __post_init__(self):
        if self.resistance is None and self.label is None:
            raise DataError("sample needs a resistance or a class label")
        if self.label is not None and self.label not in (0, 1):
            raise DataError(f"class label must be 0 or 1, got {self.label!r}")
        if not (self.nozzle_speed > 0):
            raise DataError(f"nozzle speed must be positive, got {self.nozzle_speed}")
        if not (self.voltage >= 0):
            raise DataError(f"voltage must be non-negative, got {self.voltage}")
        if not (self.flow_rate > 0):
            raise DataError(f"flow rate must be positive, got {self.flow_rate}")
        if self.resistance is not None and not (self.resistance > 0):
            raise DataError(f"resistance must be positive, got {self.resistance}")

    @property
    def features(self) -> tuple[float, float, float]:
        return (self.nozzle_speed, self.voltage, self.flow_rate)


@dataclass(frozen=True)
class Dataset:
    samples: tuple[PrintSample, ...] = ()
    feature_names: tuple[str, str, str] = field(default=FEATURE_NAMES)

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(self.samples))

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)

    @cached_property
    def X(self) -> np.ndarray:
        """Feature matrix, shape (n, 3), columns in ``FEATURE_NAMES`` order."""
        if not self.samples:
            return np.empty((0, 3))
        return np.array([s.features for s in self.samples], dtype=float)

    @cached_property
    def y(self) -> np.ndarray:
        """Class labels as int64; fails if any sample is unlabeled."""
        missing = [i for i, s in enumerate(self.samples) if s.label is None]
        if missing:
            raise DataError(f"sample {missing[0]} has no class label; run label_by_threshold first")
        return np.array([s.label for s in self.samples], dtype=np.int64)

    @property
    def is_labeled(self) -> bool:
        return all(s.label is not None for s in self.samples)

    def subset(self, indices: Iterable[int]) -> "Dataset":
        return Dataset(tuple(self.samples[i] for i in indices), self.feature_names)

    def require_trainable(self) -> None:
        if not self.samples:
            raise DataError("dataset is empty")
        self.y  # noqa: B018 - raises on unlabeled samples

    @classmethod
    def from_arrays(cls, X, y=None, resistance=None) -> "Dataset":
        X = np.asarray(X, dtype=float)
        samples = []
        for i, row in enumerate(X):
            samples.append(
                PrintSample(
                    float(row[0]),
                    float(row[1]),
                    float(row[2]),
                    resistance=None if resistance is None else float(resistance[i]),
                    label=None if y is None else int(y[i]),
                )
            )
        return cls(tuple(samples))


def _parse_float(text: str, line: int, column: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise RowError(line, f"column {column!r}: cannot parse {text!r} as a number") from None
    if not math.isfinite(value):
        raise RowError(line, f"column {column!r}: non-finite value {text!r}")
    return value


def _check_header(header: Sequence[str]) -> None:
    names = [h.strip() for h in header]
    for name in names:
        if name not in CSV_COLUMNS:
            raise SchemaError(f"unknown column {name!r}; expected {','.join(CSV_COLUMNS)}")
    for name in CSV_COLUMNS:
        if name not in names:
            raise SchemaError(f"missing column {name!r}")
    if len(set(names)) != len(names):
        raise SchemaError("duplicate column in header")


def read_csv(lines: Iterable[str]) -> Dataset:
    reader = csv.reader(lines)
    try:
        header = next(reader)
    except StopIteration:
        raise SchemaError("empty file: header row required") from None
    _check_header(header)
    col = {name.strip(): i for i, name in enumerate(header)}
    samples = []
    for row in reader:
        line = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise RowError(line, f"expected {len(header)} fields, got {len(row)}")
        cells = {name: row[i].strip() for name, i in col.items()}
        speed = _parse_float(cells["nozzle_speed_mm_min"], line, "nozzle_speed_mm_min")
        volt = _parse_float(cells["voltage_kv"], line, "voltage_kv")
        flow = _parse_float(cells["flow_rate_ul_min"], line, "flow_rate_ul_min")
        res = cells["resistance_ohm_sqr"]
        resistance = _parse_float(res, line, "resistance_ohm_sqr") if res else None
        cls_text = cells["class"]
        label = None
        if cls_text:
            value = _parse_float(cls_text, line, "class")
            if value not in (0.0, 1.0):
                raise RowError(line, f"class must be 0 or 1, got {cls_text!r}")
            label = int(value)
        if resistance is None and label is None:
            raise RowError(line, "row has neither resistance nor class")
        try:
            samples.append(PrintSample(speed, volt, flow, resistance, label))
        except DataError as exc:
            raise RowError(line, str(exc)) from None
    return Dataset(tuple(samples))


def load_csv(path: Union[str, Path]) -> Dataset:
    """Read a dataset in the five-column CSV schema; rows keep file order."""
    with open(path, newline="", encoding="utf-8") as fh:
        return read_csv(fh)


def _fmt(value: Optional[float]) -> str:
    if value is None:
        return ""
    return format(value, ".6g")


def dataset_to_csv(ds: Dataset) -> str:
    out = [",".join(CSV_COLUMNS)]
    for s in ds.samples:
        out.append(
            ",".join(
                [
                    _fmt(s.nozzle_speed),
                    _fmt(s.voltage),
                    _fmt(s.flow_rate),
                    _fmt(s.resistance),
                    "" if s.label is None else str(s.label),
                ]
            )
        )
    return "\n".join(out) + "\n"


def label_by_threshold(ds: Dataset, threshold: float = DEFAULT_THRESHOLD) -> Dataset:
    """Assign classes from sheet resistance.

    Resistance at or above ``threshold`` is low-conductance (0), below it
    high-conductance (1). Samples that already carry a label keep it.
    """
    if not threshold > 0:
        raise DataError(f"threshold must be positive, got {threshold}")
    out = []
    for i, s in enumerate(ds.samples):
        if s.label is None:
            if s.resistance is None:
                raise DataError(f"sample {i} has neither label nor resistance")
            s = replace(s, label=0 if s.resistance >= threshold else 1)
        out.append(s)
    return Dataset(tuple(out), ds.feature_names)


@dataclass(frozen=True)
class ScalerParams:
    mean: np.ndarray
    std: np.ndarray
    constant: np.ndarray

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "ScalerParams":
        std = np.asarray(d["std"], dtype=float)
        return cls(np.asarray(d["mean"], dtype=float), std, std == 0)


def _matrix(data) -> np.ndarray:
    if isinstance(data, Dataset):
        return data.X
    return np.atleast_2d(np.asarray(data, dtype=float))


def standardize_fit(data) -> ScalerParams:
    """Per-feature mean and population standard deviation."""
    X = _matrix(data)
    if X.shape[0] == 0:
        raise DataError("cannot fit a scaler on an empty dataset")
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    return ScalerParams(mean, std, std == 0)


def standardize_apply(data, sp: ScalerParams) -> np.ndarray:
    """Standardized copy of the feature matrix; constant features become 0."""
    X = _matrix(data)
    if X.shape[1] != sp.mean.shape[0]:
        raise SchemaError(f"scaler fitted on {sp.mean.shape[0]} features, got {X.shape[1]}")
    safe = np.where(sp.constant, 1.0, sp.std)
    Z = (X - sp.mean) / safe
    Z[:, sp.constant] = 0.0
    return Z


def standardize_inverse(Z, sp: ScalerParams) -> np.ndarray:
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    return Z * sp.std + sp.mean


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def stratified_split(ds: Dataset, test_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Seeded class-stratified train/test partition.

    Each class contributes ``round(count * test_fraction)`` test samples.
    When those per-class roundings disagree with the rounded overall test
    size, the class whose rounding overshot (or undershot) the most gives
    up (or receives) one sample.
    """
    if not 0.0 < test_fraction < 1.0:
        raise DataError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    y = ds.y
    classes = sorted(set(y.tolist()))
    exact = {c: float(np.sum(y == c)) * test_fraction for c in classes}
    take = {c: _round_half_up(exact[c]) for c in classes}
    target = _round_half_up(len(y) * test_fraction)
    while sum(take.values()) > target:
        c = max(classes, key=lambda c: (take[c] - exact[c], -c))
        take[c] -= 1
    while sum(take.values()) < target:
        c = max(classes, key=lambda c: (exact[c] - take[c], -c))
        take[c] += 1

    rng = make_rng(seed)
    test_idx = []
    for c in classes:
        members = np.flatnonzero(y == c)
        test_idx.extend(rng.permutation(members)[: take[c]].tolist())
    test_mask = np.zeros(len(y), dtype=bool)
    test_mask[test_idx] = True
    return ds.subset(np.flatnonzero(~test_mask)), ds.subset(np.flatnonzero(test_mask))
