"""One-parameter transformation families and their conserved quantities.

A family deforms the state (``h_x``), optionally the time (``h_t``), and the
control (``u_s``), with a gauge term ``gauge`` (Phi_s) absorbing an exact
delta differential.  At s = 0 everything reduces to the identity.  The
infinitesimal data entering the conservation law are

    xi = d h_x/ds|0,   zeta = d h_t/ds|0,   gamma = d Phi_s/ds|0.

Without time change,  C(t) = p(t).xi(t) + lambda gamma(t)  is constant along
extremals.  With time change (and rho o sigma = id) the conserved quantity
gains the term  -H^rho(t) zeta(t).

All families are evaluated along a sampled trajectory.  The control is only
defined on [a, rho(b)]_T; at t = b the last control value is held.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .calculus import GridFunction
from .errors import (
    DimensionMismatch,
    NonMonotoneTimeMap,
    NotAnExtremal,
    NotInvariant,
    RhoSigmaViolation,
)
from .expr import Dual, Expr, check_variables, evaluate, parse
from .extremal import verify_extremal
from .ocp import ControlProblem, Extremal, _control_samples, _state_samples, hamiltonian
from .timescale import TimeScale

STATE_ONLY = "state"
TIME_AND_STATE = "time_state"
MONOTONE_ATOL = 1e-12


def _expr(e) -> Expr:
    return e if isinstance(e, Expr) else parse(str(e))


@dataclass(frozen=True, eq=False)
class TransformationFamily:
    kind: str
    h_x: tuple
    u_s: tuple
    h_t: Optional[Expr] = None
    gauge: Expr = field(default_factory=lambda: parse("0"))
    s_max: float = 0.1
    s_points: int = 11
    name: str = ""

    def __post_init__(self):
        kind = {"stateonly": STATE_ONLY, "state_only": STATE_ONLY, "timeandstate": TIME_AND_STATE}.get(
            self.kind.lower().replace("-", "_"), self.kind.lower()
        )
        if kind not in (STATE_ONLY, TIME_AND_STATE):
            raise ValueError(f"unknown family kind {self.kind!r}")
        if kind == TIME_AND_STATE and self.h_t is None:
            raise ValueError("a time-and-state family needs h_t")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "h_x", tuple(_expr(e) for e in self.h_x))
        object.__setattr__(self, "u_s", tuple(_expr(e) for e in self.u_s))
        object.__setattr__(self, "gauge", _expr(self.gauge))
        h_t = self.h_t if self.h_t is not None else "t"
        object.__setattr__(self, "h_t", _expr(h_t))
        if self.s_points < 1 or not self.s_max >= 0:
            raise ValueError("need s_points >= 1 and s_max >= 0")

    @property
    def s_grid(self) -> np.ndarray:
        if self.s_points == 1:
            return np.array([0.0])
        return np.linspace(-self.s_max, self.s_max, self.s_points)

    def bound(self, prob: ControlProblem) -> "TransformationFamily":
        """Copy with problem aliases resolved and variables checked."""
        if len(self.h_x) != prob.n or len(self.u_s) != prob.m:
            raise DimensionMismatch(
                f"family has {len(self.h_x)} state and {len(self.u_s)} control maps; problem has n={prob.n}, m={prob.m}"
            )
        al = prob.aliases
        allowed = ["s", *prob.variables]
        exprs = [e.rename(al) for e in (*self.h_x, *self.u_s, self.h_t, self.gauge)]
        for e in exprs:
            check_variables(e, allowed)
        n, m = prob.n, prob.m
        return TransformationFamily(
            self.kind, tuple(exprs[:n]), tuple(exprs[n : n + m]), exprs[n + m], exprs[n + m + 1],
            self.s_max, self.s_points, self.name,
        )

    def with_gauge(self, gauge) -> "TransformationFamily":
        return TransformationFamily(
            self.kind, self.h_x, self.u_s, self.h_t, _expr(gauge), self.s_max, self.s_points, self.name
        )


def state_translation_family(h_x: Sequence[str], u_s: Sequence[str], gauge="0", **kw) -> TransformationFamily:
    return TransformationFamily(STATE_ONLY, tuple(h_x), tuple(u_s), None, gauge, **kw)


def time_translation(prob: ControlProblem, **kw) -> TransformationFamily:
    """h_t = t + s with state, control and gauge left alone."""
    return TransformationFamily(
        TIME_AND_STATE, tuple(prob.state_names), tuple(prob.control_names), "t + s", "0",
        name="time translation", **kw,
    )


def identity_family(prob: ControlProblem, kind: str = STATE_ONLY) -> TransformationFamily:
    return TransformationFamily(kind, tuple(prob.state_names), tuple(prob.control_names), "t", "0", name="identity")


@dataclass(frozen=True)
class _Along:
    """A family evaluated at every point of a trajectory for one value of s."""

    t_image: np.ndarray  # (N,)
    state: np.ndarray  # (N, n)
    control: np.ndarray  # (N-1, m)
    gauge: np.ndarray  # (N,)


def _held_controls(prob: ControlProblem, u) -> np.ndarray:
    us = _control_samples(prob, u)
    return np.vstack([us, us[-1:]])


def _along(prob: ControlProblem, fam: TransformationFamily, s: float, xs, us_full) -> _Along:
    t = prob.scale.points
    N = len(t)
    ht, hx, gg = np.empty(N), np.empty((N, prob.n)), np.empty(N)
    uc = np.empty((N, prob.m))
    for i in range(N):
        env = prob.env(t[i], xs[i], us_full[i])
        env["s"] = float(s)
        ht[i] = evaluate(fam.h_t, env)
        gg[i] = evaluate(fam.gauge, env)
        hx[i] = [evaluate(e, env) for e in fam.h_x]
        uc[i] = [evaluate(e, env) for e in fam.u_s]
    return _Along(ht, hx, uc[:-1], gg)


def _s_grid(fam: TransformationFamily, s_grid) -> np.ndarray:
    return fam.s_grid if s_grid is None else np.atleast_1d(np.asarray(s_grid, dtype=float))


def check_invariance_state_only(prob: ControlProblem, fam: TransformationFamily, x, u, s_grid=None) -> float:
    """Max over s and t in T^kappa of the integrand and dynamics invariance residuals."""
    if fam.kind != STATE_ONLY:
        raise ValueError("check_invariance_state_only needs a state-only family")
    fam = fam.bound(prob)
    xs, us = _state_samples(prob, x), _held_controls(prob, u)
    t = prob.scale.points
    mu = np.diff(t)
    base_L = np.array([prob.L(t[k], xs[k], us[k]) for k in range(len(mu))])
    worst = 0.0
    for s in _s_grid(fam, s_grid):
        A = _along(prob, fam, s, xs, us)
        gauge_delta = np.diff(A.gauge) / mu
        hx_delta = np.diff(A.state, axis=0) / mu[:, None]
        for k in range(len(mu)):
            r1 = abs(base_L[k] + gauge_delta[k] - prob.L(t[k], A.state[k], A.control[k]))
            r2 = np.max(np.abs(hx_delta[k] - prob.phi(t[k], A.state[k], A.control[k])))
            worst = max(worst, r1, float(r2))
    return float(worst)


@dataclass(frozen=True)
class TimeInvariance:
    integral_residual: float
    dynamics_residual: float
    min_image_graininess: float

    @property
    def total(self) -> float:
        return self.integral_residual + self.dynamics_residual


def image_scale(prob: ControlProblem, fam: TransformationFamily, s: float, x, u) -> TimeScale:
    """The scale {h_t(t, x(t), u(t)) : t in T} for one value of s."""
    fam = fam.bound(prob)
    A = _along(prob, fam, s, _state_samples(prob, x), _held_controls(prob, u))
    return _image(A.t_image, s)


def _image(alpha: np.ndarray, s: float) -> TimeScale:
    gaps = np.diff(alpha)
    if np.any(gaps <= MONOTONE_ATOL):
        k = int(np.argmin(gaps))
        raise NonMonotoneTimeMap(f"time map not strictly increasing at index {k} for s = {s:g}")
    return TimeScale(np.sort(alpha))


def time_invariance_residuals(prob: ControlProblem, fam: TransformationFamily, x, u, s_grid=None) -> TimeInvariance:
    fam = fam.bound(prob)
    xs, us = _state_samples(prob, x), _held_controls(prob, u)
    t = prob.scale.points
    mu = np.diff(t)
    base = np.array([prob.L(t[k], xs[k], us[k]) for k in range(len(mu))])
    base_cum = np.concatenate([[0.0], np.cumsum(mu * base)])
    integral = dynamics = 0.0
    min_mu_bar = np.inf
    for s in _s_grid(fam, s_grid):
        A = _along(prob, fam, s, xs, us)
        img = _image(A.t_image, s)
        mu_bar = np.diff(img.points)
        min_mu_bar = min(min_mu_bar, float(mu_bar.min()))
        moved = np.array([prob.L(img.points[k], A.state[k], A.control[k]) for k in range(len(mu))])
        lhs = np.concatenate([[0.0], np.cumsum(mu_bar * moved)])
        rhs = base_cum + (A.gauge - A.gauge[0])
        integral = max(integral, float(np.max(np.abs(lhs - rhs))))
        hx_delta = np.diff(A.state, axis=0) / mu_bar[:, None]
        for k in range(len(mu)):
            r = np.max(np.abs(hx_delta[k] - prob.phi(img.points[k], A.state[k], A.control[k])))
            dynamics = max(dynamics, float(r))
    return TimeInvariance(integral, dynamics, min_mu_bar)


def check_invariance_time_state(prob: ControlProblem, fam: TransformationFamily, x, u, s_grid=None) -> float:
    """Integral-identity residual (max over s and beta) plus the image-scale dynamics residual."""
    if fam.kind != TIME_AND_STATE:
        raise ValueError("check_invariance_time_state needs a time-and-state family")
    return time_invariance_residuals(prob, fam, x, u, s_grid).total


def check_invariance(prob: ControlProblem, fam: TransformationFamily, x, u, s_grid=None) -> float:
    if fam.kind == STATE_ONLY:
        return check_invariance_state_only(prob, fam, x, u, s_grid)
    return check_invariance_time_state(prob, fam, x, u, s_grid)


def check_identity(prob: ControlProblem, fam: TransformationFamily, x, u) -> float:
    """Max deviation of the family from the identity at s = 0 (should be 0)."""
    fam = fam.bound(prob)
    xs, us = _state_samples(prob, x), _held_controls(prob, u)
    A = _along(prob, fam, 0.0, xs, us)
    dev = [
        np.max(np.abs(A.t_image - prob.scale.points)),
        np.max(np.abs(A.state - xs)),
        np.max(np.abs(A.control - us[:-1])),
    ]
    return float(max(dev))


@dataclass(frozen=True, eq=False)
class Generators:
    xi: GridFunction
    zeta: np.ndarray
    gamma: np.ndarray


def generators_at_zero(prob: ControlProblem, fam: TransformationFamily, x, u) -> Generators:
    """s-derivatives at s = 0 of h_x, h_t and the gauge, along (t, x(t), u(t))."""
    fam = fam.bound(prob)
    xs, us = _state_samples(prob, x), _held_controls(prob, u)
    t = prob.scale.points
    N = len(t)
    xi, zeta, gamma = np.empty((N, prob.n)), np.empty(N), np.empty(N)

    def ds(e: Expr, env) -> float:
        v = e.eval(env)
        return v.tangent if isinstance(v, Dual) else 0.0

    for i in range(N):
        env = prob.env(t[i], xs[i], us[i])
        env["s"] = Dual(0.0, 1.0)
        xi[i] = [ds(e, env) for e in fam.h_x]
        zeta[i] = ds(fam.h_t, env)
        gamma[i] = ds(fam.gauge, env)
    return Generators(GridFunction(prob.scale, xi), zeta, gamma)


@dataclass(frozen=True, eq=False)
class ConservationReport:
    values: GridFunction
    max_deviation: float
    passed: bool
    tolerance: float = 0.0
    invariance_residual: float = 0.0
    extremal_residual: float = 0.0

    @property
    def reference(self) -> float:
        return float(self.values.values[0, 0])

    def to_dict(self) -> dict:
        return {
            "schema": 1,
            "C": [[float(t), float(v)] for t, v in zip(self.values.t, self.values.values[:, 0])],
            "max_deviation": float(self.max_deviation),
            "passed": bool(self.passed),
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "C"])
        for t, v in zip(self.values.t, self.values.values[:, 0]):
            w.writerow([format(float(t), ".17g"), format(float(v), ".17g")])
        return buf.getvalue()


def _preconditions(prob, ext, fam, extremal_tol, invariance_tol, s_grid, check_invariance_first):
    rep = verify_extremal(prob, ext)
    if not rep.nontrivial or rep.max_residual > extremal_tol:
        raise NotAnExtremal(
            f"extremal residual {rep.max_residual:.3e} exceeds {extremal_tol:.1e} (nontrivial={rep.nontrivial})"
        )
    inv = 0.0
    if check_invariance_first:
        inv = check_invariance(prob, fam, ext.x, ext.u, s_grid)
        if inv > invariance_tol:
            raise NotInvariant(f"invariance residual {inv:.3e} exceeds {invariance_tol:.1e}")
    return rep, inv


def _report(scale_points, C, rtol, rep, inv, N) -> ConservationReport:
    C = np.asarray(C, dtype=float)
    dev = float(np.max(np.abs(C - C[0])))
    tol = max(rtol * (1.0 + abs(C[0])), 10 * N * rep.max_residual)
    return ConservationReport(GridFunction(TimeScale(scale_points), C), dev, dev <= tol, tol, inv, rep.max_residual)


def conserved_quantity_state_only(
    prob: ControlProblem,
    ext: Extremal,
    fam: TransformationFamily,
    rtol: float = 1e-9,
    extremal_tol: float = 1e-9,
    invariance_tol: float = 1e-10,
    s_grid=None,
    check_invariance_first: bool = True,
) -> ConservationReport:
    """C(t) = p(t).xi(t) + lambda gamma(t) on [a, b]_T, compared against C(a)."""
    rep, inv = _preconditions(prob, ext, fam, extremal_tol, invariance_tol, s_grid, check_invariance_first)
    g = generators_at_zero(prob, fam, ext.x, ext.u)
    # the gauge is stated for the user's L; the conservation law is for sign * L
    C = np.einsum("ij,ij->i", ext.p.values, g.xi.values) + ext.lam * prob.sign * g.gamma
    return _report(prob.scale.points, C, rtol, rep, inv, len(prob.scale))


def conserved_quantity_time_state(
    prob: ControlProblem,
    ext: Extremal,
    fam: TransformationFamily,
    rtol: float = 1e-9,
    extremal_tol: float = 1e-9,
    invariance_tol: float = 1e-10,
    s_grid=None,
    check_invariance_first: bool = True,
) -> ConservationReport:
    """C(t) = -H^rho(t) zeta(t) + p(t).xi(t) + lambda gamma(t) for t in (a, b]_T."""
    if not prob.scale.rho_sigma_identity():
        raise RhoSigmaViolation("rho o sigma != id on [a, rho(b)]_T")
    rep, inv = _preconditions(prob, ext, fam, extremal_tol, invariance_tol, s_grid, check_invariance_first)
    g = generators_at_zero(prob, fam, ext.x, ext.u)
    t = prob.scale.points
    xs, us, ps = ext.x.values, ext.u.values, ext.p.values
    # H^rho(t_i) = H(t_{i-1}, x_{i-1}, u_{i-1}, lambda, p(t_i))
    h_rho = np.array([hamiltonian(prob, t[i - 1], xs[i - 1], us[i - 1], ext.lam, ps[i]) for i in range(1, len(t))])
    base = np.einsum("ij,ij->i", ps[1:], g.xi.values[1:]) + ext.lam * prob.sign * g.gamma[1:]
    C = base - h_rho * g.zeta[1:]
    return _report(t[1:], C, rtol, rep, inv, len(t))


def fit_deformed_control(prob: ControlProblem, fam: TransformationFamily, x, u, s: float) -> np.ndarray:
    """Diagnostic: least-squares u_s(t) making a state-only family invariant at one s.

    Minimises both invariance residuals over the control at each t in T^kappa,
    warm-started at the family's own u_s.
    """
    from scipy.optimize import least_squares

    fam = fam.bound(prob)
    xs, us = _state_samples(prob, x), _held_controls(prob, u)
    t = prob.scale.points
    mu = np.diff(t)
    A = _along(prob, fam, s, xs, us)
    gauge_delta = np.diff(A.gauge) / mu
    hx_delta = np.diff(A.state, axis=0) / mu[:, None]
    out = np.empty((len(mu), prob.m))
    for k in range(len(mu)):
        target_L = prob.L(t[k], xs[k], us[k]) + gauge_delta[k]

        def resid(v, k=k, target_L=target_L):
            return np.concatenate(
                [[target_L - prob.L(t[k], A.state[k], v)], hx_delta[k] - prob.phi(t[k], A.state[k], v)]
            )

        out[k] = least_squares(resid, A.control[k], xtol=1e-14, ftol=1e-14, gtol=1e-14).x
    return out
