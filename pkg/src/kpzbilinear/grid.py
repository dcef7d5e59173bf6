"""Sampled fields over (t, a, n) index boxes."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

AXIS_NAMES = ("t", "a", "n")


@dataclass(frozen=True)
class Axis:
    origin: float
    spacing: float
    count: int
    continuous: bool

    def __post_init__(self):
        if self.spacing <= 0:
            raise ValueError("axis spacing must be positive")
        if not self.continuous and self.spacing != 1:
            raise ValueError("discrete axes have unit spacing")
        if self.count < 1:
            raise ValueError("empty axis")

    @classmethod
    def from_values(cls, values, continuous: bool) -> "Axis":
        values = np.asarray(values, dtype=float)
        if values.size == 1:
            return cls(float(values[0]), 1.0, 1, continuous)
        steps = np.diff(values)
        h = float(steps[0])
        if np.any(np.abs(steps - h) > 1e-9 * max(1.0, abs(h))):
            raise ValueError("axis values must be uniformly spaced")
        return cls(float(values[0]), h, len(values), continuous)

    @property
    def values(self) -> np.ndarray:
        return self.origin + self.spacing * np.arange(self.count)

    def index(self, value: float) -> int:
        i = (value - self.origin) / self.spacing
        j = int(round(i))
        if abs(i - j) > 1e-6 or not 0 <= j < self.count:
            raise IndexError(f"value {value} not on axis")
        return j

    def to_dict(self) -> dict:
        return {"origin": self.origin, "spacing": self.spacing, "count": self.count,
                "kind": "continuous" if self.continuous else "discrete"}


@dataclass
class GridField:
    """Real values F[i_t, i_a, i_n] with axis metadata.

    ``partials`` optionally holds analytic derivatives keyed by ``"t"``, ``"a"``
    and ``"aa"``; ``valid`` marks entries that are meaningful (default all).
    """

    values: np.ndarray
    axes: tuple[Axis, Axis, Axis]
    partials: dict | None = None
    valid: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 3:
            raise ValueError("values must be 3-dimensional")
        if tuple(ax.count for ax in self.axes) != self.values.shape:
            raise ValueError("axis counts do not match values")
        if not np.all(np.isfinite(self.values)):
            bad = tuple(int(i) for i in np.argwhere(~np.isfinite(self.values))[0])
            raise ValueError(f"non-finite value at index {bad}")
        if self.valid is None:
            self.valid = np.ones(self.values.shape, dtype=bool)

    @classmethod
    def from_function(cls, func, t_values, a_values, n_values, t_continuous=True,
                      a_continuous=True, **kw) -> "GridField":
        t_values, a_values, n_values = (np.asarray(v, dtype=float) for v in (t_values, a_values, n_values))
        vals = np.array([[[func(t, a, n) for n in n_values] for a in a_values] for t in t_values], dtype=float)
        axes = (Axis.from_values(t_values, t_continuous), Axis.from_values(a_values, a_continuous),
                Axis.from_values(n_values, False))
        return cls(vals, axes, **kw)

    @property
    def shape(self):
        return self.values.shape

    def coords(self, index) -> tuple[float, float, float]:
        return tuple(ax.origin + ax.spacing * i for ax, i in zip(self.axes, index))

    def index_of(self, t, a, n) -> tuple[int, int, int]:
        return tuple(ax.index(v) for ax, v in zip(self.axes, (t, a, n)))

    def __getitem__(self, index):
        return self.values[index]

    def inside(self, index) -> bool:
        return all(0 <= i < s for i, s in zip(index, self.shape))

    # -- export ---------------------------------------------------------------
    def rows(self):
        T, A, N = (ax.values for ax in self.axes)
        for idx in np.ndindex(self.shape):
            if self.valid[idx]:
                yield T[idx[0]], A[idx[1]], N[idx[2]], self.values[idx]

    def to_csv(self, path=None, value_name: str = "F") -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["t", "a", "n", value_name])
        for t, a, n, v in self.rows():
            w.writerow([repr(float(t)), repr(float(a)), int(n), repr(float(v))])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    def to_json(self) -> dict:
        return {"axes": {k: ax.to_dict() for k, ax in zip(AXIS_NAMES, self.axes)},
                "values": self.values.tolist(), "valid": self.valid.tolist(), "meta": self.meta}

    @classmethod
    def from_json(cls, obj: dict) -> "GridField":
        axes = tuple(Axis(d["origin"], d["spacing"], d["count"], d["kind"] == "continuous")
                     for d in (obj["axes"][k] for k in AXIS_NAMES))
        return cls(np.array(obj["values"]), axes, valid=np.array(obj["valid"], dtype=bool),
                   meta=obj.get("meta", {}))

    def dumps(self) -> str:
        return json.dumps(self.to_json())
