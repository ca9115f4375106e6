"""Optimal control problems on a time scale.

    J(x, u) = int_a^b L(t, x, u) Delta t -> min (or max)
    x^Delta(t) = phi(t, x(t), u(t)),   t in [a, rho(b)]_T

States live on the whole scale, controls on T^kappa = [a, rho(b)]_T.
Maximisation is handled by negating L internally, so Hamiltonians, adjoint
equations and multipliers are always those of the minimisation problem.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .calculus import GridFunction, delta_derivative
from .errors import DimensionMismatch, RhoSigmaViolation
from .expr import Dual, Expr, check_variables, evaluate, parse
from .timescale import TimeScale, kappa

NONTRIVIAL_ATOL = 1e-12
REGULARITY_ATOL = 1e-12

Boundary = Optional[tuple]


def _as_expr(e) -> Expr:
    return e if isinstance(e, Expr) else parse(str(e))


def _as_boundary(values, n: int) -> Boundary:
    if values is None:
        return None
    vals = tuple(None if v is None else float(v) for v in np.atleast_1d(np.asarray(values, dtype=object)))
    if len(vals) != n:
        raise DimensionMismatch(f"boundary vector has {len(vals)} entries, expected {n}")
    return vals


@dataclass(frozen=True, eq=False)
class ControlProblem:
    n: int
    m: int
    lagrangian: Expr
    dynamics: tuple
    scale: TimeScale
    x_a: Boundary = None
    x_b: Boundary = None
    sense: str = "min"
    name: str = ""

    def __post_init__(self):
        if self.sense not in ("min", "max"):
            raise ValueError(f"sense must be 'min' or 'max', got {self.sense!r}")
        if len(self.scale) < 2:
            raise ValueError("a control problem needs a scale of at least two points")
        dyn = tuple(_as_expr(e) for e in self.dynamics)
        if len(dyn) != self.n:
            raise DimensionMismatch(f"{len(dyn)} dynamics expressions for n = {self.n}")
        aliases = {}
        if self.n == 1:
            aliases["x"] = "x1"
        if self.m == 1:
            aliases["u"] = "u1"
        lag = _as_expr(self.lagrangian).rename(aliases)
        dyn = tuple(e.rename(aliases) for e in dyn)
        allowed = self.variables
        for e in (lag, *dyn):
            check_variables(e, allowed)
        object.__setattr__(self, "lagrangian", lag)
        object.__setattr__(self, "dynamics", dyn)
        object.__setattr__(self, "x_a", _as_boundary(self.x_a, self.n))
        object.__setattr__(self, "x_b", _as_boundary(self.x_b, self.n))

    @property
    def state_names(self) -> list[str]:
        return [f"x{i + 1}" for i in range(self.n)]

    @property
    def control_names(self) -> list[str]:
        return [f"u{j + 1}" for j in range(self.m)]

    @property
    def variables(self) -> list[str]:
        return ["t", *self.state_names, *self.control_names]

    @property
    def aliases(self) -> dict:
        out = {}
        if self.n == 1:
            out["x"] = "x1"
        if self.m == 1:
            out["u"] = "u1"
        return out

    @property
    def sign(self) -> float:
        """+1 for min, -1 for max: the factor turning L into the minimised integrand."""
        return 1.0 if self.sense == "min" else -1.0

    def with_scale(self, scale: TimeScale) -> "ControlProblem":
        return ControlProblem(
            self.n, self.m, self.lagrangian, self.dynamics, scale,
            self.x_a, self.x_b, self.sense, self.name,
        )

    def env(self, t, x, u) -> dict:
        x = np.atleast_1d(x)
        u = np.atleast_1d(u)
        if x.size != self.n or u.size != self.m:
            raise DimensionMismatch(f"expected x in R^{self.n}, u in R^{self.m}")
        out = {"t": float(t)}
        out.update((k, float(v)) for k, v in zip(self.state_names, x))
        out.update((k, float(v)) for k, v in zip(self.control_names, u))
        return out

    def L(self, t, x, u) -> float:
        """The user's integrand (not sign-adjusted)."""
        return evaluate(self.lagrangian, self.env(t, x, u))

    def phi(self, t, x, u) -> np.ndarray:
        env = self.env(t, x, u)
        return np.array([evaluate(e, env) for e in self.dynamics])

    def derivatives(self, t, x, u):
        """(L_x, L_u, phi_x, phi_u) of the minimised problem at one point.

        Shapes: (n,), (m,), (n, n), (n, m).  One dual pass per variable.
        """
        env = self.env(t, x, u)
        names = self.state_names + self.control_names
        exprs = (self.lagrangian, *self.dynamics)
        grads = np.empty((1 + self.n, len(names)))
        for k, name in enumerate(names):
            seeded = dict(env)
            seeded[name] = Dual(env[name], 1.0)
            for r, e in enumerate(exprs):
                v = e.eval(seeded)
                grads[r, k] = v.tangent if isinstance(v, Dual) else 0.0
        n = self.n
        lx, lu = self.sign * grads[0, :n], self.sign * grads[0, n:]
        return lx, lu, grads[1:, :n], grads[1:, n:]


def _control_samples(prob: ControlProblem, u) -> np.ndarray:
    """Control values on T^kappa, as an (N-1, m) array."""
    vals = u.values if isinstance(u, GridFunction) else np.asarray(u, dtype=float)
    if vals.ndim == 1:
        vals = vals[:, None] if prob.m == 1 else vals[None, :]
    N = len(prob.scale)
    if vals.shape[0] == N:
        vals = vals[:-1]
    if vals.shape != (N - 1, prob.m):
        raise DimensionMismatch(f"control samples of shape {vals.shape}, expected ({N - 1}, {prob.m})")
    return vals


def _state_samples(prob: ControlProblem, x) -> np.ndarray:
    vals = x.values if isinstance(x, GridFunction) else np.asarray(x, dtype=float)
    if vals.ndim == 1:
        vals = vals[:, None] if prob.n == 1 else vals[None, :]
    if vals.shape != (len(prob.scale), prob.n):
        raise DimensionMismatch(f"state samples of shape {vals.shape}, expected ({len(prob.scale)}, {prob.n})")
    return vals


def control_function(prob: ControlProblem, u) -> GridFunction:
    return GridFunction(kappa(prob.scale), _control_samples(prob, u))


def state_function(prob: ControlProblem, x) -> GridFunction:
    return GridFunction(prob.scale, _state_samples(prob, x))


@dataclass(frozen=True, eq=False)
class Extremal:
    """(x, u, lambda, p): state and costate on [a,b]_T, control on [a, rho(b)]_T."""

    x: GridFunction
    u: GridFunction
    p: GridFunction
    lam: float = 1.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.lam >= 0:
            raise ValueError(f"the cost multiplier must be >= 0, got {self.lam}")
        if self.p.scale != self.x.scale or len(self.u) != len(self.x) - 1:
            raise DimensionMismatch("x, p must share a scale and u must live on its kappa part")
        object.__setattr__(self, "lam", float(self.lam))

    @classmethod
    def from_arrays(cls, prob: ControlProblem, x, u, p, lam: float = 1.0) -> "Extremal":
        return cls(
            state_function(prob, x),
            control_function(prob, u),
            GridFunction(prob.scale, _state_samples(prob, p)),
            lam,
        )

    @property
    def scale(self) -> TimeScale:
        return self.x.scale

    @property
    def nontrivial(self) -> bool:
        return self.lam + float(np.max(np.abs(self.p.values))) > NONTRIVIAL_ATOL

    def p_sigma(self) -> np.ndarray:
        """p(sigma(t)) for t in T^kappa."""
        return self.p.values[1:]


def cost(prob: ControlProblem, x, u) -> float:
    """Sum over T^kappa of mu(t) L(t, x(t), u(t)), in the user's orientation."""
    xs, us = _state_samples(prob, x), _control_samples(prob, u)
    t = prob.scale.points
    mu = np.diff(t)
    vals = np.array([prob.L(t[k], xs[k], us[k]) for k in range(len(mu))])
    return float(mu @ vals)


def simulate(prob: ControlProblem, x_a, u) -> np.ndarray:
    """States from x(sigma(t)) = x(t) + mu(t) phi(t, x(t), u(t))."""
    us = _control_samples(prob, u)
    t = prob.scale.points
    xs = np.empty((len(t), prob.n))
    xs[0] = np.asarray(x_a, dtype=float)
    for k in range(len(t) - 1):
        xs[k + 1] = xs[k] + (t[k + 1] - t[k]) * prob.phi(t[k], xs[k], us[k])
    return xs


def admissibility_residual(prob: ControlProblem, x, u) -> float:
    xs, us = _state_samples(prob, x), _control_samples(prob, u)
    t = prob.scale.points
    xd = delta_derivative(GridFunction(prob.scale, xs)).values
    res = [np.max(np.abs(xd[k] - prob.phi(t[k], xs[k], us[k]))) for k in range(len(t) - 1)]
    return float(max(res))


def regularity_check(prob: ControlProblem, x, u) -> tuple[bool, float]:
    """Whether det(I + mu dphi/dx) stays away from zero; also the smallest |det|."""
    xs, us = _state_samples(prob, x), _control_samples(prob, u)
    t = prob.scale.points
    eye = np.eye(prob.n)
    worst = np.inf
    for k in range(len(t) - 1):
        _, _, fx, _ = prob.derivatives(t[k], xs[k], us[k])
        worst = min(worst, abs(np.linalg.det(eye + (t[k + 1] - t[k]) * fx)))
    return bool(worst > REGULARITY_ATOL), float(worst)


def hamiltonian(prob: ControlProblem, t, x, u, lam: float, p_sigma) -> float:
    """lambda L + p_sigma . phi, with L sign-adjusted for max problems."""
    p_sigma = np.atleast_1d(np.asarray(p_sigma, dtype=float))
    return float(lam * prob.sign * prob.L(t, x, u) + p_sigma @ prob.phi(t, x, u))


def hamiltonian_series(prob: ControlProblem, ext: Extremal) -> np.ndarray:
    """H(t, x(t), u(t), lambda, p(sigma(t))) for every t in T^kappa."""
    t = ext.scale.points
    xs, us, ps = ext.x.values, ext.u.values, ext.p.values
    return np.array([hamiltonian(prob, t[k], xs[k], us[k], ext.lam, ps[k + 1]) for k in range(len(t) - 1)])


def hamiltonian_rho(prob: ControlProblem, ext: Extremal, t: float) -> float:
    """H evaluated at rho(t); for t > a the costate there is p^sigma(rho(t)) = p(t)."""
    ts = ext.scale
    if not ts.rho_sigma_identity():
        raise RhoSigmaViolation("rho o sigma != id on [a, rho(b)]_T")
    r = ts.index(ts.rho(t))
    if r >= len(ts) - 1:
        raise ValueError(f"rho({t}) is not in [a, rho(b)]_T")
    return hamiltonian(prob, ts.points[r], ext.x.values[r], ext.u.values[r], ext.lam, ext.p.values[r + 1])


def make_problem(
    lagrangian: str,
    dynamics: Sequence[str],
    scale: TimeScale,
    n: Optional[int] = None,
    m: Optional[int] = None,
    **kw,
) -> ControlProblem:
    """Convenience constructor that infers m from the variables used."""
    n = len(dynamics) if n is None else n
    if m is None:
        names = set()
        for e in (lagrangian, *dynamics):
            names |= _as_expr(e).variables
        idx = [int(v[1:]) for v in names if v.startswith("u") and v[1:].isdigit()]
        m = max(idx, default=1)
    return ControlProblem(n, m, _as_expr(lagrangian), tuple(dynamics), scale, **kw)
