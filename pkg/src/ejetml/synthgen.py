"""Synthetic stand-in for the e-jet print dataset.

Sheet resistance is a hinge in nozzle speed above 500 mm/min, a hinge in
ink flow below 15 ul/min and a weak symmetric voltage term around 2.5 kV,
plus Gaussian noise. The coefficients are calibrated so that the slow,
full-flow corner sits at 35 ohm/sq and the fastest prints land near
200-250 ohm/sq; the default threshold then leaves roughly two thirds of the
runs in the low-conductance class.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import asdict, dataclass, fields
from typing import Sequence

import numpy as np

from ._rng import make_rng
from .dataset import DEFAULT_THRESHOLD, Dataset, PrintSample, label_by_threshold
from .errors import DataError

SPEED_HINGE = 500.0
FLOW_HINGE = 15.0
VOLTAGE_CENTER = 2.5


@dataclass(frozen=True)
class GeneratorConfig:
    speeds: tuple[float, ...] = (300.0, 500.0, 700.0)
    voltages: tuple[float, ...] = (1.0, 2.0, 3.0, 4.0)
    flows: tuple[float, ...] = (15.0, 12.0, 10.0, 9.0, 6.0, 3.0)
    base_resistance: float = 35.0
    speed_coeff: float = 0.9
    flow_coeff: float = 6.0
    voltage_coeff: float = 24.0
    noise_sigma: float = 25.0
    threshold: float = DEFAULT_THRESHOLD
    n: int = 240
    seed: int = 42
    full_grid: bool = False

    def __post_init__(self):
        for name in ("speeds", "voltages", "flows"):
            values = tuple(float(v) for v in getattr(self, name))
            if not values:
                raise DataError(f"{name} grid must not be empty")
            object.__setattr__(self, name, values)
        if self.noise_sigma < 0:
            raise DataError("noise_sigma must be >= 0")
        if self.n < 1:
            raise DataError("n must be >= 1")
        if not self.threshold > 0:
            raise DataError("threshold must be positive")

    def to_json(self) -> str:
        d = asdict(self)
        for name in ("speeds", "voltages", "flows"):
            d[name] = list(d[name])
        return json.dumps(d, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "GeneratorConfig":
        d = json.loads(text)
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise DataError(f"unknown generator config keys: {sorted(unknown)}")
        return cls(**d)


def resistance_model(speed, voltage, flow, cfg: GeneratorConfig = GeneratorConfig()):
    """Noise-free mean sheet resistance (ohm/sq); broadcasts over arrays."""
    speed = np.asarray(speed, dtype=float)
    voltage = np.asarray(voltage, dtype=float)
    flow = np.asarray(flow, dtype=float)
    r = (
        cfg.base_resistance
        + cfg.speed_coeff * np.maximum(0.0, speed - SPEED_HINGE)
        + cfg.flow_coeff * np.maximum(0.0, FLOW_HINGE - flow)
        + cfg.voltage_coeff * np.abs(voltage - VOLTAGE_CENTER)
    )
    return float(r) if r.ndim == 0 else r


def _grid_points(cfg: GeneratorConfig) -> np.ndarray:
    return np.array(list(itertools.product(cfg.speeds, cfg.voltages, cfg.flows)), dtype=float)


def generate(cfg: GeneratorConfig = GeneratorConfig()) -> Dataset:
    """Draw a labeled dataset.

    Settings are drawn with replacement from the grid, one index per axis
    per sample. With ``full_grid`` every grid cell appears exactly once in
    product order and ``n`` is ignored.
    """
    rng = make_rng(cfg.seed)
    if cfg.full_grid:
        pts = _grid_points(cfg)
        speed, volt, flow = pts[:, 0], pts[:, 1], pts[:, 2]
    else:
        speeds = np.asarray(cfg.speeds)
        volts = np.asarray(cfg.voltages)
        flows = np.asarray(cfg.flows)
        speed = speeds[rng.integers(len(speeds), size=cfg.n)]
        volt = volts[rng.integers(len(volts), size=cfg.n)]
        flow = flows[rng.integers(len(flows), size=cfg.n)]
    mean = resistance_model(speed, volt, flow, cfg)
    noise = rng.normal(0.0, cfg.noise_sigma, size=len(speed)) if cfg.noise_sigma > 0 else 0.0
    resistance = np.maximum(1.0, mean + noise)
    samples = tuple(
        PrintSample(float(s), float(v), float(f), resistance=float(r))
        for s, v, f, r in zip(speed, volt, flow, resistance)
    )
    return label_by_threshold(Dataset(samples), cfg.threshold)


def term_ranges(cfg: GeneratorConfig = GeneratorConfig()) -> dict[str, float]:
    """Spread (max - min) of each additive term over the configured grid."""

    def spread(values: Sequence[float]) -> float:
        return max(values) - min(values)

    return {
        "nozzle_speed": spread([cfg.speed_coeff * max(0.0, s - SPEED_HINGE) for s in cfg.speeds]),
        "flow_rate": spread([cfg.flow_coeff * max(0.0, FLOW_HINGE - f) for f in cfg.flows]),
        "voltage": spread([cfg.voltage_coeff * abs(v - VOLTAGE_CENTER) for v in cfg.voltages]),
    }
