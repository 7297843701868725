"""Time grids and survival curves shared by the quantum and classical paths."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Union

import numpy as np

UNDERFLOW = 1e-300


class Model(str, Enum):
    QUANTUM_EXACT = "quantum_exact"
    QUANTUM_LONGTIME = "quantum_longtime"
    QUANTUM_POWERLAW = "quantum_powerlaw_model"
    CLASSICAL_EXACT = "classical_exact"
    ORACLE = "oracle"


@dataclass(frozen=True)
class TimeGrid:
    t_min: float
    t_max: float
    n_points: int = 200
    kind: str = "logarithmic"

    def __post_init__(self) -> None:
        if self.kind not in ("linear", "logarithmic"):
            raise ValueError(f"unknown grid kind {self.kind!r}")
        if not (0 <= self.t_min < self.t_max):
            raise ValueError(f"need 0 <= t_min < t_max, got {self.t_min}, {self.t_max}")
        if self.n_points < 2:
            raise ValueError("a grid needs at least 2 points")
        if self.kind == "logarithmic" and self.t_min <= 0:
            raise ValueError("logarithmic grids need t_min > 0")

    @classmethod
    def log(cls, t_min: float, t_max: float, n_points: int = 200) -> TimeGrid:
        return cls(t_min, t_max, n_points, "logarithmic")

    @classmethod
    def linear(cls, t_min: float, t_max: float, n_points: int = 200) -> TimeGrid:
        return cls(t_min, t_max, n_points, "linear")

    def times(self) -> np.ndarray:
        if self.kind == "linear":
            return np.linspace(self.t_min, self.t_max, self.n_points)
        return np.geomspace(self.t_min, self.t_max, self.n_points)


GridLike = Union[TimeGrid, np.ndarray, list, tuple]


def as_times(grid: GridLike) -> np.ndarray:
    t = grid.times() if isinstance(grid, TimeGrid) else np.asarray(grid, dtype=float)
    t = np.atleast_1d(t)
    if np.any(t < 0):
        raise ValueError("times must be non-negative")
    if len(t) > 1 and np.any(np.diff(t) <= 0):
        raise ValueError("times must be strictly increasing")
    return t


def default_grid(gamma_min: float, n_points: int = 200) -> TimeGrid:
    """Log grid over [0.1, 10/(2*gamma_min)], covering short, power-law and tail regimes."""
    t_max = 10.0 / (2.0 * gamma_min) if gamma_min > 1e-12 else 1e3
    return TimeGrid.log(0.1, max(t_max, 10.0), n_points)


@dataclass(frozen=True, eq=False)
class SurvivalCurve:
    times: np.ndarray
    values: np.ndarray
    model: Model
    meta: dict = field(default_factory=dict)
    underflow: bool = False

    def __post_init__(self) -> None:
        t = np.array(self.times, dtype=float)
        v = np.array(self.values, dtype=float)
        if t.shape != v.shape or t.ndim != 1:
            raise ValueError("times and values must be 1-d arrays of equal length")
        if len(t) > 1 and np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        tiny = np.abs(v) < UNDERFLOW
        flag = bool(self.underflow or np.any(tiny & (v != 0)))
        v[tiny] = 0.0
        t.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "model", Model(self.model))
        object.__setattr__(self, "underflow", flag)

    def window(self, lo: float, hi: float) -> tuple[np.ndarray, np.ndarray]:
        sel = (self.times >= lo) & (self.times <= hi)
        return self.times[sel], self.values[sel]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "value", "model"])
        for t, v in zip(self.times, self.values):
            w.writerow([f"{t:.17g}", f"{v:.17g}", self.model.value])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps(
            {
                "model": self.model.value,
                "meta": self.meta,
                "underflow": self.underflow,
                "t": [float(x) for x in self.times],
                "value": [float(x) for x in self.values],
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> SurvivalCurve:
        doc = json.loads(text)
        return cls(
            np.array(doc["t"]), np.array(doc["value"]), Model(doc["model"]),
            doc.get("meta", {}), doc.get("underflow", False),
        )
