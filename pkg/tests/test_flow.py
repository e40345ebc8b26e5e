import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from tcenter.field import (
    CenterCase,
    FieldSpec,
    circle_factors,
    level_point,
    pair_factors,
    reduced_hamiltonian,
    rotation_field,
    sample_domain,
    strong_integral,
)
from tcenter.flow import (
    NearOrigin,
    blowup_consistent,
    flow,
    flow_many,
    orbit_clock,
    orbit_samples,
    period,
    period_blowup_check,
    trajectory,
)
from tcenter.integrate import Dopri5, LeftDomain, StepUnderflow, solve

TOL = 1e-10
ROT, ROT_I = rotation_field()
CIRC2 = reduced_hamiltonian(circle_factors(2))
PAIR = reduced_hamiltonian(pair_factors())
PAIR_I = strong_integral(pair_factors())


# -- integrator ----------------------------------------------------------------------

def test_dense_output_matches_closed_form():
    st = Dopri5(lambda t, y: np.array([-y[1], y[0]]), 0.0, [1.0, 0.0], 3.0, 1e-10)
    worst = 0.0
    while st.step():
        seg = st.segment
        for s in np.linspace(seg.t0, seg.t1, 5):
            worst = max(worst, float(np.hypot(*(seg(s) - [math.cos(s), math.sin(s)]))))
    assert worst < 1e-9


def test_solve_matches_scipy_on_nonlinear_field():
    rhs = PAIR.rhs()
    z0 = np.array([0.7, -0.2])
    ref = solve_ivp(lambda t, y: rhs(t, y), (0, 1.3), z0, method="DOP853", rtol=1e-13, atol=1e-14).y[:, -1]
    assert np.max(np.abs(solve(rhs, z0, 0.0, 1.3, 1e-10) - ref)) < 1e-9


def test_backward_integration():
    z = flow(ROT, [1.0, 0.0], -math.pi / 2)
    np.testing.assert_allclose(z, [0, -1], atol=1e-9)


def test_blow_up_is_reported():
    with pytest.raises((LeftDomain, StepUnderflow)):
        solve(lambda t, y: y * y, np.array([1.0]), 0.0, 2.0, 1e-8)


# -- flow ---------------------------------------------------------------------------

def test_flow_examples():
    np.testing.assert_allclose(flow(ROT, [1, 0], math.pi / 2), [0, 1], atol=1e-9)
    z = np.array([0.3, -0.4])
    assert np.array_equal(flow(PAIR, z, 0.0), z)
    np.testing.assert_allclose(flow(CIRC2, [1, 0], math.pi / 8), [0, 1], atol=1e-9)
    assert np.array_equal(flow(PAIR, [0, 0], 3.0), [0, 0])


def test_tolerance_range_enforced():
    with pytest.raises(ValueError):
        flow(ROT, [1, 0], 1.0, tol=-1.0)
    with pytest.raises(ValueError):
        flow(ROT, [1, 0], 1.0, tol=1e-2)


@pytest.mark.parametrize("fs,I", [(ROT, ROT_I), (PAIR, PAIR_I)])
def test_group_law(fs, I):
    rng = np.random.default_rng(5)
    Z = sample_domain(I, 40, rng)
    s, t = rng.uniform(-1.5, 1.5, 40), rng.uniform(-1.5, 1.5, 40)
    a = flow_many(fs, flow_many(fs, Z, s, TOL), t, TOL)
    b = flow_many(fs, Z, s + t, TOL)
    assert np.max(np.hypot(*(a - b).T)) <= 10 * TOL


def test_flow_many_matches_single_flows():
    rng = np.random.default_rng(6)
    Z = sample_domain(PAIR_I, 8, rng)
    T = rng.uniform(-1, 1, 8)
    batch = flow_many(PAIR, Z, T, TOL)
    for z, t, w in zip(Z, T, batch):
        assert np.hypot(*(flow(PAIR, z, t, TOL) - w)) <= 10 * TOL


def test_integral_conservation():
    rng = np.random.default_rng(7)
    Z = sample_domain(PAIR_I, 30, rng)
    W = flow_many(PAIR, Z, rng.uniform(0, 2, 30), TOL)
    assert np.max(np.abs(PAIR_I(W[:, 0], W[:, 1]) - PAIR_I(Z[:, 0], Z[:, 1]))) <= 10 * TOL


# -- period -------------------------------------------------------------------------

@pytest.mark.parametrize("z", [[1.0, 0.0], [0.1, 0.2], [-0.5, 0.3]])
def test_period_rotation(z):
    assert abs(period(ROT, ROT_I, z, TOL).theta - 2 * math.pi) <= 1e-8


def test_period_linear_fast_rotation():
    assert abs(period(CIRC2, None, [0.4, -0.1], TOL).theta - math.pi / 2) <= 1e-8


@pytest.mark.parametrize("c", [0.25, 0.5, 0.8])
def test_period_homogeneity(c):
    z = np.array([0.5, 0.4])
    t1 = period(PAIR, None, z, TOL).theta
    tc = period(PAIR, None, c * z, TOL).theta
    assert abs(tc * c**2 - t1) <= 1e-6 * t1


def test_period_constant_on_orbit():
    z = np.array([0.6, 0.1])
    t0 = period(PAIR, None, z, TOL).theta
    for s in (0.3, 0.9):
        assert abs(period(PAIR, None, flow(PAIR, z, s, TOL), TOL).theta - t0) <= 10 * TOL * max(1, t0)


def test_period_near_origin_rejected():
    with pytest.raises(NearOrigin):
        period(ROT, ROT_I, [1e-8, 0.0])


def test_blowup_k2_scaling():
    samples = period_blowup_check(PAIR, PAIR_I, 0.0, [1.0, 1e-2, 1e-4])
    th = [s.theta for s in samples]
    assert th[0] < th[1] < th[2]
    # r ~ level^(1/4) and theta ~ r^-2, so two decades of level multiply theta by 10
    assert abs(th[1] / th[0] - 10) < 1e-6 and abs(th[2] / th[1] - 10) < 1e-6
    assert blowup_consistent(CenterCase.NF1_ZeroLinear, samples)


def test_blowup_flat_for_nondegenerate():
    samples = period_blowup_check(CIRC2, strong_integral(circle_factors(2)), 1.0, [1.0, 0.1, 0.01])
    assert all(abs(s.theta - math.pi / 2) < 1e-8 for s in samples)
    assert blowup_consistent(CenterCase.NF3_NonDegenerate, samples)


def test_orbit_samples_quarter_turns():
    tr = orbit_samples(ROT, [1.0, 0.0], 4, TOL)
    np.testing.assert_allclose(tr.points, [[1, 0], [0, 1], [-1, 0], [0, -1]], atol=1e-9)
    assert tr.closure_residual <= 10 * TOL


def test_orbit_samples_conserve_level():
    tr = orbit_samples(PAIR, level_point(PAIR_I, 0.3, 1.0), 16, TOL)
    lv = PAIR_I(tr.points[:, 0], tr.points[:, 1])
    assert np.max(np.abs(lv - 0.3)) <= 1e-8


def test_orbit_clock_time_of_point():
    clk = orbit_clock(ROT, [1.0, 0.0], TOL)
    for t in (0.5, 2.0, 5.5):
        p = [math.cos(t), math.sin(t)]
        assert abs(clk.time_of_point(p) - t) < 1e-9
        np.testing.assert_allclose(clk.point_at(t), p, atol=1e-9)


def test_clockwise_field_has_positive_period():
    cw = FieldSpec.from_components("y", "-x")
    assert abs(period(cw, None, [0.5, 0.0], TOL).theta - 2 * math.pi) <= 1e-8


def test_trajectory_samples_dense_output():
    tr = trajectory(ROT, [1.0, 0.0], 3.0, 30, TOL)
    expect = np.column_stack([np.cos(tr.times), np.sin(tr.times)])
    assert np.max(np.abs(tr.points - expect)) < 1e-9
    assert list(tr.rows())[0] == (0.0, 1.0, 0.0)
