"""Extremal conditions of the weak maximum principle on a time scale.

For t in [a, rho(b)]_T an extremal (x, u, lambda, p) satisfies

    -p^Delta(t)  = phi_x^T p^sigma(t) + lambda L_x          (adjoint)
     0           = phi_u^T p^sigma(t) + lambda L_u          (stationarity)

This module checks those residuals, recovers p from its terminal value and
synthesises normal extremals (lambda = 1) with a forward-backward sweep,
optionally wrapped in Broyden shooting on p(b).
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass
from typing import Callable, Optional

import numpy as np

from .calculus import GridFunction
from .errors import DimensionMismatch, NoConvergence, RegularityViolation
from .ocp import (
    ControlProblem,
    Extremal,
    _control_samples,
    _state_samples,
    admissibility_residual,
    regularity_check,
    simulate,
)

log = logging.getLogger(__name__)

STATIONARITY_TOL = 1e-11
NEWTON_MAX_ITERS = 100
NEWTON_FD_STEP = 1e-6


@dataclass(frozen=True)
class ExtremalReport:
    adjoint_residual: float
    stationarity_residual: float
    admissibility_residual: float
    nontrivial: bool

    @property
    def max_residual(self) -> float:
        return max(self.adjoint_residual, self.stationarity_residual, self.admissibility_residual)

    def ok(self, tol: float = 1e-9) -> bool:
        return self.nontrivial and self.max_residual <= tol

    def to_dict(self) -> dict:
        return asdict(self)


def verify_extremal(prob: ControlProblem, ext: Extremal) -> ExtremalReport:
    if ext.x.dim != prob.n or ext.p.dim != prob.n or ext.u.dim != prob.m:
        raise DimensionMismatch("extremal dimensions do not match the problem")
    if ext.scale != prob.scale:
        raise DimensionMismatch("extremal and problem live on different scales")
    t = prob.scale.points
    mu = np.diff(t)
    xs, us, ps = ext.x.values, ext.u.values, ext.p.values
    adj = stat = 0.0
    for k in range(len(mu)):
        lx, lu, fx, fu = prob.derivatives(t[k], xs[k], us[k])
        ps_k = ps[k + 1]
        p_delta = (ps[k + 1] - ps[k]) / mu[k]
        adj = max(adj, float(np.max(np.abs(p_delta + fx.T @ ps_k + ext.lam * lx))))
        stat = max(stat, float(np.max(np.abs(fu.T @ ps_k + ext.lam * lu))))
    return ExtremalReport(adj, stat, admissibility_residual(prob, xs, us), ext.nontrivial)


def adjoint_backward(prob: ControlProblem, x, u, lam: float, p_b) -> GridFunction:
    """Costate from p(t) = p(sigma(t)) + mu(t) [phi_x^T p(sigma(t)) + lambda L_x]."""
    xs, us = _state_samples(prob, x), _control_samples(prob, u)
    ok, worst = regularity_check(prob, xs, us)
    if not ok:
        raise RegularityViolation(f"det(I + mu phi_x) = {worst:.3e} along the trajectory")
    t = prob.scale.points
    p = np.empty((len(t), prob.n))
    p[-1] = np.asarray(p_b, dtype=float)
    for k in range(len(t) - 2, -1, -1):
        lx, _, fx, _ = prob.derivatives(t[k], xs[k], us[k])
        p[k] = p[k + 1] + (t[k + 1] - t[k]) * (fx.T @ p[k + 1] + lam * lx)
    return GridFunction(prob.scale, p)


def damped_newton(
    residual: Callable[[np.ndarray], np.ndarray],
    u0,
    tol: float = STATIONARITY_TOL,
    max_iters: int = NEWTON_MAX_ITERS,
    fd_step: float = NEWTON_FD_STEP,
) -> np.ndarray:
    """Drive ``residual`` to zero (least squares if non-square) from ``u0``.

    The Jacobian is a central difference of ``residual``; the step is halved
    until the max-norm of the residual stops increasing.
    """
    u = np.array(u0, dtype=float)
    r = np.atleast_1d(residual(u))
    norm = float(np.max(np.abs(r)))
    for _ in range(max_iters):
        if norm <= tol:
            return u
        jac = np.empty((r.size, u.size))
        for j in range(u.size):
            e = np.zeros(u.size)
            e[j] = fd_step
            jac[:, j] = (np.atleast_1d(residual(u + e)) - np.atleast_1d(residual(u - e))) / (2 * fd_step)
        step = np.linalg.lstsq(jac, -r, rcond=None)[0]
        alpha = 1.0
        for _ in range(40):
            cand = u + alpha * step
            r_c = np.atleast_1d(residual(cand))
            n_c = float(np.max(np.abs(r_c)))
            if n_c <= norm:
                break
            alpha *= 0.5
        else:
            break
        if n_c == norm and np.all(cand == u):
            break
        u, r, norm = cand, r_c, n_c
    if norm <= tol:
        return u
    raise NoConvergence("Newton iteration did not reach the residual tolerance", norm)


def stationarity_residual(prob: ControlProblem, t: float, x, lam: float, p_sigma) -> Callable:
    p_sigma = np.atleast_1d(np.asarray(p_sigma, dtype=float))

    def residual(u):
        _, lu, _, fu = prob.derivatives(t, x, u)
        return fu.T @ p_sigma + lam * lu

    return residual


def solve_stationarity(prob: ControlProblem, t: float, x, lam: float, p_sigma, u0) -> np.ndarray:
    """u with |phi_u^T p_sigma + lambda L_u| <= 1e-11; nearest root to u0 wins."""
    return damped_newton(stationarity_residual(prob, t, np.atleast_1d(x), lam, p_sigma), np.atleast_1d(u0))


@dataclass(frozen=True)
class SweepOptions:
    theta: float = 0.5
    max_iters: int = 500
    tol_u: float = 1e-10
    tol_shoot: float = 1e-9
    shoot_fd_step: float = 1e-5
    shoot_max_iters: int = 50

    def __post_init__(self):
        if not 0 < self.theta <= 1:
            raise ValueError(f"relaxation factor must lie in (0, 1], got {self.theta}")


def _fixed(vec) -> np.ndarray:
    return np.array([v is not None for v in vec], dtype=bool)


def _sweep(prob: ControlProblem, x_a, u, p_b, opts: SweepOptions):
    t = prob.scale.points
    u = np.array(u, dtype=float)
    for it in range(1, opts.max_iters + 1):
        xs = simulate(prob, x_a, u)
        ps = adjoint_backward(prob, xs, u, 1.0, p_b).values
        u_new = np.array([solve_stationarity(prob, t[k], xs[k], 1.0, ps[k + 1], u[k]) for k in range(len(t) - 1)])
        change = float(np.max(np.abs(u_new - u)))
        if change <= opts.tol_u:
            u = u_new
            break
        u = u + opts.theta * (u_new - u)
    else:
        raise NoConvergence(f"sweep did not settle in {opts.max_iters} iterations", change)
    xs = simulate(prob, x_a, u)
    ps = adjoint_backward(prob, xs, u, 1.0, p_b).values
    return xs, u, ps, it


def forward_backward_sweep(
    prob: ControlProblem,
    u_init=None,
    p_b=None,
    shooting: bool = False,
    options: Optional[SweepOptions] = None,
) -> Extremal:
    """Normal extremal (lambda = 1) from fixed x(a) and either p(b) or a target x(b).

    With ``shooting`` the components of p(b) belonging to fixed coordinates of
    x(b) are found by Broyden's method; the remaining components are taken
    from ``p_b`` (default 0).
    """
    opts = options or SweepOptions()
    if prob.x_a is None or not _fixed(prob.x_a).all():
        raise ValueError("the sweep needs every coordinate of x(a) fixed")
    x_a = np.array(prob.x_a, dtype=float)
    N = len(prob.scale)
    u = np.zeros((N - 1, prob.m)) if u_init is None else _control_samples(prob, u_init).copy()
    p_b = np.zeros(prob.n) if p_b is None else np.array(p_b, dtype=float).reshape(prob.n)

    if not shooting:
        xs, u, ps, iters = _sweep(prob, x_a, u, p_b, opts)
        return Extremal(
            GridFunction(prob.scale, xs),
            GridFunction(prob.scale.kappa(), u),
            GridFunction(prob.scale, ps),
            1.0,
            {"sweep_iterations": iters},
        )

    if prob.x_b is None or not _fixed(prob.x_b).any():
        raise ValueError("shooting needs at least one fixed coordinate of x(b)")
    mask = _fixed(prob.x_b)
    target = np.array([v for v in prob.x_b if v is not None], dtype=float)
    state = {"u": u, "calls": 0}

    def miss(z):
        pb = p_b.copy()
        pb[mask] = z
        xs, uu, ps, _ = _sweep(prob, x_a, state["u"], pb, opts)
        state["u"] = uu
        state["calls"] += 1
        return xs[-1][mask] - target, (xs, uu, ps)

    z = p_b[mask].copy()
    F, sol = miss(z)
    jac = np.empty((F.size, z.size))
    for j in range(z.size):
        dz = np.zeros(z.size)
        dz[j] = opts.shoot_fd_step
        jac[:, j] = (miss(z + dz)[0] - F) / opts.shoot_fd_step
    it = 0
    while float(np.max(np.abs(F))) > opts.tol_shoot:
        it += 1
        if it > opts.shoot_max_iters:
            raise NoConvergence("shooting on p(b) did not meet x(b)", float(np.max(np.abs(F))))
        step = np.linalg.lstsq(jac, -F, rcond=None)[0]
        F_new, sol = miss(z + step)
        dF = F_new - F
        jac += np.outer(dF - jac @ step, step) / float(step @ step)
        z, F = z + step, F_new
        log.debug("shooting iteration %d: miss %.3e", it, float(np.max(np.abs(F))))
    xs, uu, ps = sol
    return Extremal(
        GridFunction(prob.scale, xs),
        GridFunction(prob.scale.kappa(), uu),
        GridFunction(prob.scale, ps),
        1.0,
        {"shooting_iterations": it, "sweeps": state["calls"]},
    )
