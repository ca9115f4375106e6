"""Built-in worked problems: quadratic, car kinematics, abnormal control.

``quadratic``  minimise int u^2 subject to x^Delta = u.  Invariant under
               h_s = x + s t up to Phi_s = s^2 t + 2 x s with u_s = u + s,
               and under time translation.
``car``        minimise int u1^2 + u2^2 subject to the kinematic car model;
               autonomous, hence invariant under time translation.
``abnormal``   maximise int u subject to x^Delta = (u - u^2)^2 with
               x(0) = x(1) = 0; (x, u, lambda, p) = (0, 1, 0, k) is an
               abnormal extremal and u = 1 is optimal.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .calculus import GridFunction, delta_derivative
from .extremal import SweepOptions, forward_backward_sweep
from .noether import TransformationFamily, state_translation_family, time_translation
from .ocp import ControlProblem, Extremal, make_problem
from .timescale import TimeScale, make_uniform, parse_scale


@dataclass
class BuiltinExample:
    name: str
    problem: ControlProblem
    families: list
    make_extremal: Callable[[], Extremal]
    p_b: Optional[list] = None
    shooting: bool = False
    notes: dict = field(default_factory=dict)


def _scale(scale) -> TimeScale:
    if scale is None:
        return None
    return parse_scale(scale) if isinstance(scale, str) else scale


def quadratic_problem(scale: TimeScale, x_a: float = 0.0, x_b: float = 1.0) -> ControlProblem:
    return make_problem("u^2", ["u"], scale, x_a=[x_a], x_b=[x_b], name="quadratic")


def quadratic_family(**kw) -> TransformationFamily:
    return state_translation_family(["x + s*t"], ["u + s"], gauge="s^2*t + 2*x*s", name="x + s t", **kw)


def quadratic_extremal(prob: ControlProblem, x0: float, c: float, lam: float = 1.0) -> Extremal:
    """x = x0 + c (t - a), u = c, p = -2 c lambda: the closed-form extremal."""
    ts = prob.scale
    t = ts.points
    x = x0 + c * (t - ts.a)
    return Extremal(
        GridFunction(ts, x),
        GridFunction(ts.kappa(), np.full(len(t) - 1, c)),
        GridFunction(ts, np.full(len(t), -2.0 * c * lam)),
        lam,
    )


def quadratic_corollary_residual(ext: Extremal) -> float:
    """max |Delta/Delta t [x^Delta(t) t - x(t)]| over T^kappa^kappa."""
    xd = delta_derivative(ext.x)
    g = GridFunction(xd.scale, xd.values[:, 0] * xd.t - ext.x.values[:-1, 0])
    return float(np.max(np.abs(delta_derivative(g).values)))


def quadratic(scale=None, x_a: float = 0.0, x_b: float = 1.0) -> BuiltinExample:
    ts = _scale(scale) or make_uniform(0.0, 1.0, 0.25)
    prob = quadratic_problem(ts, x_a, x_b)
    c = (x_b - x_a) / (ts.b - ts.a)
    return BuiltinExample(
        "quadratic",
        prob,
        [quadratic_family(), time_translation(prob)],
        lambda: quadratic_extremal(prob, x_a, c),
        shooting=True,
    )


CAR_DYNAMICS = ["u1*cos(x3)", "u1*sin(x3)", "u2"]


def car_problem(scale: TimeScale) -> ControlProblem:
    return make_problem("u1^2 + u2^2", CAR_DYNAMICS, scale, x_a=[0.0, 0.0, 0.0], name="car")


def car(scale=None, p_b=(-2.0, 0.0, 0.0), options: Optional[SweepOptions] = None) -> BuiltinExample:
    ts = _scale(scale) or make_uniform(0.0, 1.0, 0.05)
    prob = car_problem(ts)
    return BuiltinExample(
        "car",
        prob,
        [time_translation(prob)],
        lambda: forward_backward_sweep(prob, p_b=list(p_b), options=options),
        p_b=list(p_b),
    )


def abnormal_problem(scale: TimeScale) -> ControlProblem:
    return make_problem("u", ["(u - u^2)^2"], scale, x_a=[0.0], x_b=[0.0], sense="max", name="abnormal")


def abnormal_extremal(prob: ControlProblem, u_value: float = 1.0, k: float = -1.0) -> Extremal:
    ts = prob.scale
    N = len(ts)
    return Extremal(
        GridFunction(ts, np.zeros(N)),
        GridFunction(ts.kappa(), np.full(N - 1, u_value)),
        GridFunction(ts, np.full(N, k)),
        0.0,
    )


def abnormal(scale=None, k: float = -1.0) -> BuiltinExample:
    ts = _scale(scale) or make_uniform(0.0, 1.0, 0.25)
    prob = abnormal_problem(ts)
    return BuiltinExample(
        "abnormal",
        prob,
        [time_translation(prob)],
        lambda: abnormal_extremal(prob, 1.0, k),
        notes={"k": k},
    )


EXAMPLES = {"quadratic": quadratic, "car": car, "abnormal": abnormal}


def get_example(name: str, scale=None) -> BuiltinExample:
    try:
        factory = EXAMPLES[name]
    except KeyError:
        raise KeyError(f"unknown example {name!r}; choose from {', '.join(EXAMPLES)}") from None
    return factory(scale)
