import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tsnoether.builtin import (
    abnormal_extremal,
    abnormal_problem,
    car,
    quadratic_corollary_residual,
    quadratic_extremal,
    quadratic_family,
    quadratic_problem,
)
from tsnoether.errors import DimensionMismatch, NonMonotoneTimeMap, NotAnExtremal, NotInvariant
from tsnoether.noether import (
    TransformationFamily,
    check_invariance,
    check_invariance_state_only,
    check_invariance_time_state,
    conserved_quantity_state_only,
    conserved_quantity_time_state,
    fit_deformed_control,
    generators_at_zero,
    identity_family,
    image_scale,
    state_translation_family,
    time_translation,
)
from tsnoether.ocp import Extremal, make_problem, simulate
from tsnoether.timescale import make_explicit, make_qscale, make_uniform

from conftest import scales

U4 = make_uniform(0, 1, 0.25)
SCALES = [U4, make_qscale(2, 0, 4), make_explicit([0, 0.25, 0.5, 1, 2, 4])]


@pytest.mark.parametrize("ts", SCALES)
def test_quadratic_family_is_invariant(ts):
    prob = quadratic_problem(ts)
    ext = quadratic_extremal(prob, 0.2, 0.6)
    assert check_invariance_state_only(prob, quadratic_family(), ext.x, ext.u) <= 1e-12


@given(scales(max_points=30), st.integers(0, 2**32 - 1))
def test_quadratic_invariance_holds_for_any_admissible_pair(ts, seed):
    rng = np.random.default_rng(seed)
    prob = quadratic_problem(ts)
    u = rng.uniform(-1, 1, len(ts) - 1)
    x = simulate(prob, [rng.uniform(-1, 1)], u)
    scale = 1 + np.max(np.abs(x)) + np.max(np.abs(ts.points))
    assert check_invariance_state_only(prob, quadratic_family(), x, u) <= 1e-12 * scale / ts.graininess[:-1].min()


@pytest.mark.parametrize("ts", SCALES)
def test_identity_families(ts):
    prob = quadratic_problem(ts)
    ext = quadratic_extremal(prob, 0.0, 1.0)
    assert check_invariance(prob, identity_family(prob), ext.x, ext.u) == 0
    assert check_invariance(prob, identity_family(prob, "time_state"), ext.x, ext.u, [0.0]) == 0
    g = generators_at_zero(prob, identity_family(prob), ext.x, ext.u)
    assert not g.xi.values.any() and not g.zeta.any() and not g.gamma.any()


def test_missing_gauge_detected():
    prob = quadratic_problem(U4)
    ext = quadratic_extremal(prob, 0.0, 1.0)
    fam = quadratic_family().with_gauge("0")
    r = check_invariance_state_only(prob, fam, ext.x, ext.u, [0.1])
    assert np.isclose(r, 2 * 1 * 0.1 + 0.01, rtol=1e-12)


def test_generators():
    prob = quadratic_problem(U4)
    ext = quadratic_extremal(prob, 0.3, 0.5)
    g = generators_at_zero(prob, quadratic_family(), ext.x, ext.u)
    assert np.array_equal(g.xi.values[:, 0], U4.points)
    assert np.array_equal(g.gamma, 2 * ext.x.values[:, 0])
    assert not g.zeta.any()
    g = generators_at_zero(prob, time_translation(prob), ext.x, ext.u)
    assert np.all(g.zeta == 1) and not g.xi.values.any() and not g.gamma.any()


def test_time_translation_on_car_and_nonautonomous():
    ex = car()
    ext = ex.make_extremal()
    assert check_invariance_time_state(ex.problem, time_translation(ex.problem), ext.x, ext.u) <= 1e-10
    prob = make_problem("t*u^2", ["u"], U4, x_a=[0])
    u = np.ones(4)
    x = simulate(prob, [0], u)
    r = check_invariance_time_state(prob, time_translation(prob), x, u, [0.1])
    # (t+s - t) u^2 mu summed over [a, b)
    assert np.isclose(r, 0.1 * 1.0, rtol=1e-12)


def test_image_scale_and_monotonicity():
    prob = quadratic_problem(U4)
    x, u = U4.points, np.ones(4)
    assert np.allclose(image_scale(prob, time_translation(prob), 0.1, x, u).points, U4.points + 0.1)
    fold = TransformationFamily("time_state", ("x",), ("u",), "t - 10*s*t^2", s_max=0.1)
    with pytest.raises(NonMonotoneTimeMap):
        check_invariance_time_state(prob, fold, x, u)


def test_family_validation():
    prob = quadratic_problem(U4)
    with pytest.raises(ValueError):
        TransformationFamily("sideways", ("x",), ("u",))
    with pytest.raises(ValueError):
        TransformationFamily("time_state", ("x",), ("u",))
    with pytest.raises(DimensionMismatch):
        check_invariance(prob, state_translation_family(["x", "x"], ["u"]), U4.points, np.ones(4))


@pytest.mark.parametrize("ts", SCALES)
def test_quadratic_conservation(ts):
    prob = quadratic_problem(ts)
    x0, c = 0.4, -0.9
    ext = quadratic_extremal(prob, x0, c)
    rep = conserved_quantity_state_only(prob, ext, quadratic_family())
    assert rep.passed and rep.max_deviation <= 1e-12
    assert np.isclose(rep.reference, 2 * x0 - 2 * c * ts.a, rtol=1e-12, atol=1e-12)
    assert quadratic_corollary_residual(ext) <= 1e-12


def test_time_translation_on_quadratic_gives_c_squared():
    prob = quadratic_problem(U4)
    ext = quadratic_extremal(prob, 0.0, 0.7)
    rep = conserved_quantity_time_state(prob, ext, time_translation(prob))
    assert rep.passed and np.allclose(rep.values.values[:, 0], 0.49, rtol=1e-14)


def test_abnormal_time_translation():
    prob = abnormal_problem(U4)
    ext = abnormal_extremal(prob, 1.0, -1.0)
    rep = conserved_quantity_time_state(prob, ext, time_translation(prob))
    assert rep.passed and rep.max_deviation == 0 and not rep.values.values.any()


def test_car_hamiltonian_is_conserved():
    ex = car()
    ext = ex.make_extremal()
    rep = conserved_quantity_time_state(ex.problem, ext, time_translation(ex.problem))
    assert rep.passed and rep.max_deviation <= 1e-8 * (1 + abs(rep.reference))


def test_identity_family_gives_zero():
    prob = quadratic_problem(U4)
    rep = conserved_quantity_state_only(prob, quadratic_extremal(prob, 0, 1), identity_family(prob))
    assert rep.passed and not rep.values.values.any()


def test_preconditions_enforced():
    prob = quadratic_problem(U4)
    ext = quadratic_extremal(prob, 0, 1)
    bad = Extremal(ext.x, ext.u, ext.p + 1.0, 1.0)
    with pytest.raises(NotAnExtremal):
        conserved_quantity_state_only(prob, bad, quadratic_family())
    with pytest.raises(NotInvariant):
        conserved_quantity_state_only(prob, ext, quadratic_family().with_gauge("0"))


@given(st.floats(-5, 5), st.floats(-2, 2), st.floats(-2, 2))
def test_gauge_shift_covariance(shift, x0, c):
    prob = quadratic_problem(U4)
    ext = quadratic_extremal(prob, x0, c)
    base = conserved_quantity_state_only(prob, ext, quadratic_family())
    fam = quadratic_family().with_gauge(f"s^2*t + 2*x*s + s*({shift!r})")
    moved = conserved_quantity_state_only(prob, ext, fam)
    assert np.allclose(moved.values.values - base.values.values, shift, rtol=0, atol=1e-12 * (1 + abs(shift)))
    assert abs(moved.max_deviation - base.max_deviation) <= 1e-12 * (1 + abs(shift))


@given(st.sampled_from(SCALES), st.floats(-2, 2), st.floats(-2, 2))
def test_state_only_agrees_with_time_state_form(ts, x0, c):
    prob = quadratic_problem(ts)
    ext = quadratic_extremal(prob, x0, c)
    so = conserved_quantity_state_only(prob, ext, quadratic_family())
    ts_rep = conserved_quantity_time_state(prob, ext, quadratic_family())
    assert np.array_equal(ts_rep.values.values, so.values.values[1:])


@settings(max_examples=10)
@given(st.floats(-1, 1), st.sampled_from([0.25, 0.1]))
def test_conservation_along_swept_extremals(pb, h):
    # state-independent dynamics and L = u^2 admit the x + s t family with gauge s^2 t + 2 x s
    from tsnoether.extremal import forward_backward_sweep

    prob = make_problem("u^2", ["u"], make_uniform(0, 1, h), x_a=[0.3])
    ext = forward_backward_sweep(prob, p_b=[pb])
    rep = conserved_quantity_state_only(prob, ext, quadratic_family())
    assert rep.passed and rep.max_deviation <= 1e-8 * (1 + abs(rep.reference))


def test_report_serialisation():
    prob = quadratic_problem(U4)
    rep = conserved_quantity_state_only(prob, quadratic_extremal(prob, 0, 1), quadratic_family())
    d = rep.to_dict()
    assert d["schema"] == 1 and d["passed"] is True and len(d["C"]) == 5
    assert rep.to_csv().splitlines()[0] == "t,C"


def test_fit_deformed_control_recovers_translation():
    prob = quadratic_problem(U4)
    ext = quadratic_extremal(prob, 0, 1)
    fitted = fit_deformed_control(prob, quadratic_family(), ext.x, ext.u, 0.1)
    assert np.allclose(fitted, 1.1, atol=1e-8)


def test_discrete_hamiltonian_drift_is_reported():
    # autonomous and certified invariant, yet H o rho moves by -h^2 (u_k^2 + x_{k+1}^2) per step
    from tsnoether.extremal import forward_backward_sweep
    from tsnoether.ocp import hamiltonian_rho

    devs = []
    for h in (0.1, 0.05):
        prob = make_problem("x^2 + u^2", ["u"], make_uniform(0, 1, h), x_a=[1.0])
        ext = forward_backward_sweep(prob, p_b=[0.0])
        fam = time_translation(prob)
        assert check_invariance_time_state(prob, fam, ext.x, ext.u) <= 1e-10
        rep = conserved_quantity_time_state(prob, ext, fam)
        assert not rep.passed
        H = np.array([hamiltonian_rho(prob, ext, t) for t in prob.scale.points[1:]])
        x, u = ext.x.values[:, 0], ext.u.values[:, 0]
        assert np.allclose(np.diff(H), -h * h * (u[:-1] ** 2 + x[1:-1] ** 2), rtol=0, atol=1e-11)
        devs.append(rep.max_deviation)
    assert 1.8 < devs[0] / devs[1] < 2.2
