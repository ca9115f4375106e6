"""Delta derivative and delta integral of functions sampled on a time scale.

Every point of a finite scale except b is right-scattered, so the forward
difference quotient is the delta derivative itself and the left-endpoint sum
is the delta integral itself; neither is an approximation.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DimensionMismatch, ZeroGraininess
from .timescale import TimeScale, kappa


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Samples of a d-vector valued function, one row per scale point."""

    scale: TimeScale
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.ndim == 1:
            vals = vals[:, None]
        if vals.ndim != 2 or vals.shape[1] < 1:
            raise DimensionMismatch(f"values must be (N, d), got shape {vals.shape}")
        if vals.shape[0] != len(self.scale):
            raise DimensionMismatch(
                f"{vals.shape[0]} samples for a scale of {len(self.scale)} points"
            )
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_callable(cls, scale: TimeScale, f: Callable[[float], object]) -> "GridFunction":
        return cls(scale, np.array([np.atleast_1d(f(float(t))) for t in scale.points]))

    @classmethod
    def constant(cls, scale: TimeScale, value) -> "GridFunction":
        v = np.atleast_1d(np.asarray(value, dtype=float))
        return cls(scale, np.tile(v, (len(scale), 1)))

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def t(self) -> np.ndarray:
        return self.scale.points

    def __len__(self):
        return self.values.shape[0]

    def __call__(self, t: float) -> np.ndarray:
        return self.values[self.scale.index(t)]

    def component(self, j: int) -> np.ndarray:
        return self.values[:, j]

    def _combine(self, other, op):
        if isinstance(other, GridFunction):
            if other.scale != self.scale:
                raise DimensionMismatch("grid functions live on different scales")
            other = other.values
        return GridFunction(self.scale, op(self.values, other))

    def __add__(self, other):
        return self._combine(other, np.add)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __mul__(self, other):
        return self._combine(other, np.multiply)

    __rmul__ = __mul__

    def __neg__(self):
        return GridFunction(self.scale, -self.values)

    def restrict(self, scale: TimeScale) -> "GridFunction":
        """Samples at the points of ``scale`` (which must be a subset)."""
        idx = [self.scale.index(t) for t in scale.points]
        return GridFunction(scale, self.values[idx])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t"] + [f"v{j + 1}" for j in range(self.dim)])
        for t, row in zip(self.scale.points, self.values):
            w.writerow([format(float(t), ".17g")] + [format(float(v), ".17g") for v in row])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "GridFunction":
        rows = list(csv.reader(io.StringIO(text)))
        header, body = rows[0], [r for r in rows[1:] if r]
        if not header or header[0].strip() != "t":
            raise ValueError("grid function CSV must start with a 't' column")
        data = np.array([[float(v) for v in r] for r in body])
        return cls(TimeScale(data[:, 0]), data[:, 1:])


def delta_derivative(f: GridFunction) -> GridFunction:
    """f^Delta on T^kappa: (f(sigma(t)) - f(t)) / mu(t)."""
    mu = np.diff(f.scale.points)
    if np.any(mu <= 0):
        raise ZeroGraininess("zero graininess at a point of T^kappa")
    return GridFunction(kappa(f.scale), np.diff(f.values, axis=0) / mu[:, None])


def sigma_shift(f: GridFunction) -> GridFunction:
    """f^sigma = f o sigma on T^kappa."""
    return GridFunction(kappa(f.scale), f.values[1:])


def delta_integral(f: GridFunction, c: float, d: float) -> np.ndarray:
    """Sum of mu(t) f(t) over t in [c, d) of the scale."""
    i, j = f.scale.index(c), f.scale.index(d)
    if j < i:
        raise ValueError(f"integration bounds out of order: {c} > {d}")
    mu = np.diff(f.scale.points[i : j + 1])
    return mu @ f.values[i:j] if j > i else np.zeros(f.dim)


def cumulative_integral(f: GridFunction) -> GridFunction:
    """F(t) = integral of f from a to t, at every point of the scale."""
    mu = np.diff(f.scale.points)
    acc = np.vstack([np.zeros(f.dim), np.cumsum(mu[:, None] * f.values[:-1], axis=0)])
    return GridFunction(f.scale, acc)
