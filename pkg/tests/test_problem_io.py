import json

import numpy as np
import pytest

from tsnoether.builtin import car, quadratic, quadratic_extremal, quadratic_family, quadratic_problem
from tsnoether.errors import ProblemFileError
from tsnoether.extremal import SweepOptions, verify_extremal
from tsnoether.problem_io import (
    dump_problem,
    dumps,
    extremal_to_csv,
    parse_problem,
    read_trajectory,
    trajectory_to_extremal,
)
from tsnoether.timescale import make_uniform

QUADRATIC = """
n = 1
m = 1
lagrangian = "u^2"
dynamics = ["u"]
scale = "uniform:0,1,0.25"
x_a = [0.0]
x_b = [1.0]
shooting = true

[transformation]
kind = "state"
h_x = ["x + s*t"]
u_s = ["u + s"]
gauge = "s^2*t + 2*x*s"
"""


def test_parse_problem_file():
    pf = parse_problem(QUADRATIC, "q.toml")
    assert pf.problem.n == 1 and pf.problem.x_b == (1.0,)
    assert pf.shooting and pf.family.kind == "state"
    assert pf.problem.name == "q"


def test_scale_override():
    pf = parse_problem(QUADRATIC, scale_override="qscale:2,0,3")
    assert pf.problem.scale.points.tolist() == [1, 2, 4, 8]


def test_free_boundary_entries():
    pf = parse_problem(QUADRATIC.replace('x_b = [1.0]', 'x_b = ["free"]'))
    assert pf.problem.x_b == (None,)


@pytest.mark.parametrize(
    "edit, line",
    [
        (("dynamics = [\"u\"]", "dynamics = [\"u +\"]"), 5),
        (("scale = \"uniform:0,1,0.25\"", "scale = \"uniform:0,1,0.3\""), 6),
        (("x_b = [1.0]", "x_b = [1.0, 2.0]"), 8),
        (("lagrangian = \"u^2\"", "lagrangian = \"u^2 + y\""), 4),
    ],
)
def test_errors_carry_line_numbers(edit, line):
    with pytest.raises(ProblemFileError) as err:
        parse_problem(QUADRATIC.replace(*edit), "q.toml")
    assert f"q.toml:{line}:" in str(err.value)


def test_missing_key_and_bad_toml():
    with pytest.raises(ProblemFileError, match="missing required key 'n'"):
        parse_problem(QUADRATIC.replace("n = 1\n", ""))
    with pytest.raises(ProblemFileError):
        parse_problem("n = = 1")


@pytest.mark.parametrize("factory", [quadratic, car])
def test_dump_round_trip(factory):
    ex = factory()
    text = dump_problem(ex.problem, ex.families[0], SweepOptions(theta=0.7), ex.p_b, ex.shooting)
    pf = parse_problem(text)
    assert pf.problem.scale == ex.problem.scale
    assert pf.problem.lagrangian == ex.problem.lagrangian
    assert pf.problem.dynamics == ex.problem.dynamics
    assert pf.problem.x_a == ex.problem.x_a and pf.problem.x_b == ex.problem.x_b
    assert pf.options.theta == 0.7 and pf.shooting == ex.shooting
    assert pf.family.kind == ex.families[0].kind
    assert dump_problem(pf.problem, pf.family, pf.options, pf.p_b, pf.shooting) == text


def test_extremal_csv_round_trip():
    prob = quadratic_problem(make_uniform(0, 1, 0.1))
    ext = quadratic_extremal(prob, 0.1, 0.3)
    text = extremal_to_csv(prob, ext)
    lines = text.splitlines()
    assert lines[0] == "t,x1,u1,p1,lambda"
    assert lines[-1].split(",")[2] == ""
    back = trajectory_to_extremal(prob, read_trajectory(prob, text))
    assert np.array_equal(back.x.values, ext.x.values) and np.array_equal(back.p.values, ext.p.values)
    assert np.array_equal(back.u.values, ext.u.values) and back.lam == 1.0
    assert verify_extremal(prob, back).ok()


def test_trajectory_errors():
    prob = quadratic_problem(make_uniform(0, 1, 0.5))
    with pytest.raises(ProblemFileError, match="missing column"):
        read_trajectory(prob, "t,x1\n0,0\n0.5,0.5\n1,1\n")
    with pytest.raises(ProblemFileError, match="does not match"):
        read_trajectory(prob, "t,x1,u1\n0,0,1\n0.4,0.5,1\n1,1,\n")
    with pytest.raises(ProblemFileError, match="costate"):
        trajectory_to_extremal(prob, read_trajectory(prob, "t,x1,u1\n0,0,1\n0.5,0.5,1\n1,1,\n"))


def test_dumps_formats():
    text = dumps({"a": 0.1, "b": [1, 2.5], "c": np.bool_(True), "d": None, "e": float("nan")})
    assert json.loads(text) == {"a": 0.1, "b": [1, 2.5], "c": True, "d": None, "e": None}
    assert "0.10000000000000001" in text
