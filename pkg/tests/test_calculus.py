import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tsnoether.calculus import GridFunction, cumulative_integral, delta_derivative, delta_integral, sigma_shift
from tsnoether.errors import PointNotInScale
from tsnoether.timescale import make_explicit, make_qscale, make_uniform

from conftest import poly_values, scales

coeff_lists = st.lists(st.floats(-2, 2, allow_nan=False), min_size=1, max_size=5)


def gf(ts, f):
    return GridFunction.from_callable(ts, f)


def test_derivative_of_square_on_half_grid():
    d = delta_derivative(gf(make_explicit([0, 0.5, 1]), lambda t: t * t))
    assert d.t.tolist() == [0, 0.5]
    assert d.values[:, 0].tolist() == [0.5, 1.5]


@pytest.mark.parametrize("ts", [make_uniform(0, 1, 0.25), make_qscale(3, -1, 2), make_explicit([0, 0.1, 0.5, 2])])
def test_trivial_derivatives(ts):
    assert np.all(delta_derivative(GridFunction.constant(ts, 4.2)).values == 0)
    assert np.allclose(delta_derivative(gf(ts, lambda t: t)).values, 1, rtol=1e-14)


def test_sigma_shift_examples():
    f = sigma_shift(gf(make_explicit([0, 0.5, 1]), lambda t: t))
    assert f.values[:, 0].tolist() == [0.5, 1]
    g = sigma_shift(gf(make_qscale(2, 0, 2), lambda t: t * t))
    assert g.values[:, 0].tolist() == [4, 16]


def test_integral_examples():
    ts = make_uniform(0, 1, 0.25)
    assert delta_integral(GridFunction.constant(ts, 1.0), 0, 1)[0] == 1.0
    assert delta_integral(GridFunction.constant(ts, 1.0), 0.5, 0.5)[0] == 0.0
    q = make_qscale(2, 0, 3)
    assert delta_integral(gf(q, lambda t: 1 / t), 1, 8)[0] == 3.0
    with pytest.raises(PointNotInScale):
        delta_integral(GridFunction.constant(ts, 1.0), 0, 0.3)


def test_vector_valued_componentwise():
    ts = make_uniform(0, 1, 0.5)
    f = gf(ts, lambda t: [t, 2 * t, -t])
    assert f.dim == 3
    assert np.allclose(delta_derivative(f).values, [[1, 2, -1]] * 2)
    assert np.allclose(delta_integral(f, 0, 1), [0.25, 0.5, -0.25])


def test_csv_round_trip():
    f = gf(make_qscale(1.7, -2, 4), lambda t: [np.sin(t), t**3])
    text = f.to_csv()
    assert text.splitlines()[0] == "t,v1,v2"
    g = GridFunction.from_csv(text)
    assert g.scale == f.scale and np.array_equal(g.values, f.values)


def test_derivative_converges_on_sine():
    errs = []
    for h in (0.1, 0.01, 0.001):
        d = delta_derivative(gf(make_uniform(0, 1, h), np.sin))
        errs.append(np.max(np.abs(d.values[:, 0] - np.cos(d.t))))
    for coarse, fine in zip(errs, errs[1:]):
        assert 8 < coarse / fine < 12
    assert errs[-1] < 0.5 * 0.001


@given(scales(max_points=500), coeff_lists)
def test_simple_useful_formula(ts, c):
    f = gf(ts, lambda t: poly_values(c, t))
    fs, fd = sigma_shift(f).values, delta_derivative(f).values
    mu = ts.graininess[:-1, None]
    rhs = f.values[:-1] + mu * fd
    ulp = np.spacing(np.maximum(np.abs(fs), np.abs(f.values[:-1])))
    assert np.all(np.abs(fs - rhs) <= 4 * ulp)


@given(scales(max_points=500), coeff_lists, coeff_lists)
def test_product_rule(ts, cf, cg):
    # relative error in the max norm over the grid
    f, g = gf(ts, lambda t: poly_values(cf, t)), gf(ts, lambda t: poly_values(cg, t))
    lhs = delta_derivative(f * g).values
    rhs = sigma_shift(f).values * delta_derivative(g).values + delta_derivative(f).values * g.values[:-1]
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * max(np.max(np.abs(rhs)), 1e-300)


@given(scales(max_points=200), coeff_lists)
def test_fundamental_theorem(ts, c):
    F = gf(ts, lambda t: poly_values(c, t))
    total = delta_integral(_extend(delta_derivative(F), ts), ts.a, ts.b)
    assert np.allclose(total, F.values[-1] - F.values[0], rtol=1e-12, atol=1e-12 * np.max(np.abs(F.values)))


def _extend(fd, ts):
    return GridFunction(ts, np.vstack([fd.values, fd.values[-1:]]))


@given(scales(max_points=100), coeff_lists, coeff_lists, st.floats(-3, 3), st.floats(-3, 3))
def test_linearity(ts, cf, cg, a, b):
    f, g = gf(ts, lambda t: poly_values(cf, t)), gf(ts, lambda t: poly_values(cg, t))
    combo = f * a + g * b
    lhs = delta_derivative(combo).values
    rhs = a * delta_derivative(f).values + b * delta_derivative(g).values
    tol = 1e-10 * (1 + np.abs(f.values).max() + np.abs(g.values).max()) / ts.graininess[:-1].min()
    assert np.all(np.abs(lhs - rhs) <= tol)
    I = delta_integral(combo, ts.a, ts.b)
    J = a * delta_integral(f, ts.a, ts.b) + b * delta_integral(g, ts.a, ts.b)
    assert np.allclose(I, J, rtol=1e-10, atol=1e-10)


@given(scales(max_points=100), coeff_lists)
def test_integral_additive_and_cumulative(ts, c):
    f = gf(ts, lambda t: poly_values(c, t))
    mid = ts.points[len(ts) // 2]
    whole = delta_integral(f, ts.a, ts.b)
    parts = delta_integral(f, ts.a, mid) + delta_integral(f, mid, ts.b)
    assert np.allclose(whole, parts, rtol=1e-12, atol=1e-10)
    F = cumulative_integral(f)
    assert np.allclose(F.values[-1], whole, rtol=1e-12, atol=1e-10)
    assert np.allclose(delta_derivative(F).values, f.values[:-1], rtol=1e-8, atol=1e-8)
