"""Compact time scales [a, b]_T stored as finite, strictly increasing point sets.

Continuous pieces of a time scale are represented by fine uniform sampling;
results for T = R are recovered in the limit h -> 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import (
    InvalidBase,
    NonDivisibleInterval,
    NonFinite,
    PointNotInScale,
    ScaleSpecError,
    TooFewPoints,
)

DIVISIBILITY_RTOL = 1e-9
DEDUP_ATOL = 1e-12
# point lookup accepts values this close (relative to the scale extent)
LOOKUP_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class TimeScale:
    """Finite strictly increasing set of time points.

    Conventions: sigma(b) = b and rho(a) = a, so mu(b) = 0.
    """

    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim != 1 or pts.size < 1:
            raise TooFewPoints("a time scale needs at least one point")
        if not np.all(np.isfinite(pts)):
            raise NonFinite("time scale points must be finite")
        if np.any(np.diff(pts) <= 0):
            raise ValueError("time scale points must be strictly increasing")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return self.points.size

    def __eq__(self, other):
        if not isinstance(other, TimeScale):
            return NotImplemented
        return self.points.shape == other.points.shape and bool(
            np.all(self.points == other.points)
        )

    def __hash__(self):
        return hash(self.points.tobytes())

    def __repr__(self):
        if len(self) <= 8:
            body = ", ".join(f"{p:g}" for p in self.points)
        else:
            body = f"{self.a:g}, {self.points[1]:g}, ..., {self.b:g}; N={len(self)}"
        return f"TimeScale({{{body}}})"

    @property
    def a(self) -> float:
        return float(self.points[0])

    @property
    def b(self) -> float:
        return float(self.points[-1])

    @property
    def graininess(self) -> np.ndarray:
        """mu at every point, with mu(b) = 0."""
        return np.append(np.diff(self.points), 0.0)

    def index(self, t: float) -> int:
        """Index of ``t`` in the point set (tolerant to rounding)."""
        pts = self.points
        tol = LOOKUP_RTOL * max(1.0, abs(pts[0]), abs(pts[-1]))
        i = int(np.searchsorted(pts, t))
        for j in (i - 1, i):
            if 0 <= j < pts.size and abs(pts[j] - t) <= tol:
                return j
        raise PointNotInScale(f"{t!r} is not a point of {self!r}")

    def __contains__(self, t) -> bool:
        try:
            self.index(t)
        except PointNotInScale:
            return False
        return True

    def sigma(self, t: float) -> float:
        i = self.index(t)
        return float(self.points[min(i + 1, len(self) - 1)])

    def rho(self, t: float) -> float:
        i = self.index(t)
        return float(self.points[max(i - 1, 0)])

    def mu(self, t: float) -> float:
        return self.sigma(t) - float(self.points[self.index(t)])

    def is_right_scattered(self, t: float) -> bool:
        return self.sigma(t) > t

    def is_left_scattered(self, t: float) -> bool:
        return self.rho(t) < t

    def classify(self, t: float) -> str:
        """One of 'isolated', 'right-scattered', 'left-scattered', 'dense'."""
        rs, ls = self.is_right_scattered(t), self.is_left_scattered(t)
        if rs and ls:
            return "isolated"
        if rs:
            return "right-scattered"
        if ls:
            return "left-scattered"
        return "dense"

    def kappa(self) -> "TimeScale":
        return kappa(self)

    def rho_sigma_identity(self) -> bool:
        """True iff rho(sigma(t)) = t for every t in [a, rho(b)]_T."""
        pts = self.points
        return all(self.rho(self.sigma(t)) == t for t in pts[:-1])

    def restrict(self, c: float, d: float) -> "TimeScale":
        i, j = self.index(c), self.index(d)
        return TimeScale(self.points[i : j + 1])


def make_uniform(a: float, b: float, h: float) -> TimeScale:
    """The lattice {a, a+h, ..., b}; (b - a)/h must be an integer."""
    if not (b > a):
        raise ValueError(f"need b > a, got a={a}, b={b}")
    if not (h > 0):
        raise ValueError(f"step must be positive, got {h}")
    ratio = (b - a) / h
    n = round(ratio)
    if n < 1 or abs(n - ratio) > DIVISIBILITY_RTOL * ratio:
        raise NonDivisibleInterval(f"({b} - {a}) is not a multiple of {h}")
    pts = a + h * np.arange(n + 1, dtype=float)
    pts[-1] = b
    return TimeScale(pts)


def make_qscale(q: float, n_min: int, n_max: int) -> TimeScale:
    """Points q**n for n_min <= n <= n_max."""
    if not q > 1:
        raise InvalidBase(f"q must exceed 1, got {q}")
    if n_max <= n_min:
        raise TooFewPoints(f"need n_max > n_min, got {n_min}, {n_max}")
    return TimeScale(np.array([float(q) ** n for n in range(n_min, n_max + 1)]))


def make_explicit(points: Iterable[float]) -> TimeScale:
    pts = np.sort(np.asarray(list(points), dtype=float))
    if not np.all(np.isfinite(pts)):
        raise NonFinite("time scale points must be finite")
    if pts.size:
        keep = np.append(True, np.diff(pts) > DEDUP_ATOL)
        pts = pts[keep]
    if pts.size < 2:
        raise TooFewPoints("a time scale needs at least two distinct points")
    return TimeScale(pts)


def kappa(ts: TimeScale) -> TimeScale:
    """T^kappa: on a finite scale b is always left-scattered and is dropped."""
    if len(ts) < 2:
        raise TooFewPoints("kappa of a one-point scale is empty")
    return TimeScale(ts.points[:-1])


def _numbers(text: str, spec: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ScaleSpecError(f"bad number in scale spec {spec!r}: {exc}") from None
    return vals


def parse_scale(spec: str) -> TimeScale:
    """Build a scale from ``uniform:a,b,h``, ``qscale:q,nmin,nmax`` or ``explicit:p1,p2,...``."""
    kind, sep, rest = spec.strip().partition(":")
    if not sep:
        raise ScaleSpecError(f"scale spec {spec!r} lacks a 'kind:' prefix")
    vals = _numbers(rest, spec)
    kind = kind.strip().lower()
    if kind == "uniform":
        if len(vals) != 3:
            raise ScaleSpecError("uniform scale needs a,b,h")
        return make_uniform(*vals)
    if kind == "qscale":
        if len(vals) != 3 or not all(float(v).is_integer() for v in vals[1:]):
            raise ScaleSpecError("qscale needs q,nmin,nmax with integer exponents")
        return make_qscale(vals[0], int(vals[1]), int(vals[2]))
    if kind == "explicit":
        return make_explicit(vals)
    raise ScaleSpecError(f"unknown scale kind {kind!r}")


def format_scale(ts: TimeScale) -> str:
    """An ``explicit:`` spec that reproduces ``ts`` exactly."""
    return "explicit:" + ",".join(format(float(p), ".17g") for p in ts.points)


def is_uniform(ts: TimeScale, rtol: float = 1e-9) -> bool:
    mu = np.diff(ts.points)
    return bool(np.all(np.abs(mu - mu[0]) <= rtol * abs(mu[0])))

