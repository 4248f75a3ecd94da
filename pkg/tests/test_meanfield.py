import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from scipy.optimize import brentq

from polarcascade.meanfield import (IntegrationConfig, Stability, find_stationary, integrate,
                                    integrate_endpoint, stability_probe, sup_distance)
from polarcascade.model import (ModelParams, PopulationState, Regime, classify_regime,
                                consensus_reachable, drift_arguments,
                                predict_limit_symmetric, regime_margin)
from polarcascade.trajectory import Trajectory

CASE1 = ModelParams(0.8, 0.7, red_fraction=0.5)
CASE2 = ModelParams(0.8, 0.7, red_fraction=0.65)
CASE4 = ModelParams(0.2, 0.8, red_fraction=0.5)


def exact_path(theta0, params, horizon):
    """Event-driven closed-form solution for delta = 0.

    Between switching lines each group relaxes exponentially toward 1 or 0.
    Returns a callable t -> (theta_b, theta_r).
    """
    def flow(x0, s, t):
        return 1 - (1 - x0) * math.exp(-t) if s > 0 else (x0 * math.exp(-t) if s < 0 else x0)

    def signs(b, r):
        return tuple(int(np.sign(a)) if abs(a) > 1e-13 else 0
                     for a in drift_arguments(b, r, params))

    pieces = []  # (t_start, b0, r0, sb, sr)
    t0, (b, r) = 0.0, theta0
    sb, sr = signs(b, r)
    while t0 < horizon and (sb or sr):
        def args(t):
            return drift_arguments(flow(b, sb, t), flow(r, sr, t), params)
        grid = np.linspace(0, horizon - t0, 4001)
        vals = np.array([args(t) for t in grid])
        hit = None
        for k in (0, 1):
            s = (sb, sr)[k]
            if s == 0:
                continue
            bad = np.flatnonzero(np.sign(vals[1:, k]) != s)
            if len(bad):
                i = bad[0] + 1
                tc = brentq(lambda t: args(t)[k], grid[i - 1], grid[i], xtol=1e-15)
                hit = tc if hit is None else min(hit, tc)
        pieces.append((t0, b, r, sb, sr))
        if hit is None:
            break
        b, r = flow(b, sb, hit), flow(r, sr, hit)
        t0 += hit
        ab, ar = drift_arguments(b, r, params)
        if abs(ab) < 1e-9 and abs(ar) < 1e-9:
            sb = sr = 0  # both lines at once: the centre
        else:
            # transversal crossing: the group on the line reverses
            sb = -sb if abs(ab) < 1e-9 else sb
            sr = -sr if abs(ar) < 1e-9 else sr
    pieces.append((t0, b, r, sb, sr)) if not pieces or pieces[-1][0] != t0 else None

    def at(t):
        for t_start, b0, r0, s_b, s_r in reversed(pieces):
            if t >= t_start:
                dt = t - t_start
                return flow(b0, s_b, dt), flow(r0, s_r, dt)
        return theta0
    return at


def max_gap(traj, oracle):
    return max(np.hypot(*(np.array(oracle(t)) - th)) for t, th in zip(traj.t, traj.theta))


# -- integration examples ---------------------------------------------------------

def test_case1_reaches_consensus():
    traj = integrate(PopulationState(0.7, 0.7), CASE1)
    assert traj.final.theta_b == pytest.approx(1, abs=1e-9)
    assert traj.final.theta_r == pytest.approx(1, abs=1e-9)
    assert max_gap(traj, exact_path((0.7, 0.7), CASE1, 30)) < 1e-3


def test_tipping_case2_blue_reverses():
    traj = integrate(PopulationState(0.68, 0.6), CASE2)
    blue = traj.theta[:, 0]
    peak = int(np.argmax(blue))
    assert 0 < peak < len(blue) - 1 and blue[peak] > 0.68
    assert traj.final.theta_b == pytest.approx(0, abs=1e-9)
    assert traj.final.theta_r == pytest.approx(1, abs=1e-9)
    assert max_gap(traj, exact_path((0.68, 0.6), CASE2, 30)) < 2e-3


def test_case4_halts_at_center():
    traj = integrate(PopulationState(0.7, 0.7), CASE4)
    assert traj.final == PopulationState(0.5, 0.5)
    # the closed form reaches the centre at t = ln(1.4); samples are 0.01 apart
    rep = find_stationary(traj)
    assert rep.point == PopulationState(0.5, 0.5)
    assert rep.reached_at == pytest.approx(math.log(1.4), abs=1e-2)


def test_majority_flip():
    p = ModelParams(0.8, 0.5, red_fraction=0.6)
    traj = integrate(PopulationState(0.9, 0.6), p)
    assert traj.final.theta_b == pytest.approx(1, abs=1e-9)
    assert traj.final.theta_r == pytest.approx(0, abs=1e-9)
    # red signal stays negative along the whole path
    assert all(drift_arguments(b, r, p)[1] < 0 for b, r in traj.theta[:-1])
    assert max_gap(traj, exact_path((0.9, 0.6), p, 30)) < 1e-3


@given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1), st.floats(0.05, 0.95),
       st.floats(0, 1), st.floats(0, 1))
def test_state_stays_in_unit_square(alpha, beta, delta, r, tb, tr):
    traj = integrate(PopulationState(tb, tr), ModelParams(alpha, beta, delta, r),
                     IntegrationConfig(step_h=0.01, horizon_t=5))
    assert np.all((traj.theta >= 0) & (traj.theta <= 1))
    assert np.all(np.diff(traj.t) > 0)


@given(st.floats(0.05, 1), st.floats(0.05, 1), st.floats(0.05, 0.95), st.floats(0.02, 0.98))
def test_step_halving_terminal_point(alpha, beta, r, theta0):
    p = ModelParams(alpha, beta, red_fraction=r)
    assume(abs(theta0 - 0.5) > 1e-2 and regime_margin(p) > 1e-3)
    assume(classify_regime(p) is not Regime.CASE4_NON_PARTISAN)
    a = integrate_endpoint(PopulationState(theta0, theta0), p, IntegrationConfig(step_h=1e-3))
    b = integrate_endpoint(PopulationState(theta0, theta0), p, IntegrationConfig(step_h=5e-4))
    assert np.max(np.abs(a.as_array() - b.as_array())) < 1e-6


# -- oracle equivalence (smaller samples than the acceptance suite) ---------------------

@given(st.floats(0.05, 1), st.floats(0.05, 1), st.floats(0.05, 0.95), st.floats(0.01, 0.99),
       st.sampled_from(["complete", "sbm"]), st.floats(0.05, 0.95))
def test_symmetric_limit_oracle(alpha, beta, r, theta0, top, rho):
    p = ModelParams(alpha, beta, red_fraction=r, homophily=rho, topology=top)
    assume(abs(theta0 - 0.5) > 1e-3 and regime_margin(p) > 1e-3)
    end = integrate_endpoint(PopulationState(theta0, theta0), p)
    expect = predict_limit_symmetric(theta0, p)
    assert np.max(np.abs(end.as_array() - expect.as_array())) < 1e-6


@given(st.floats(0.05, 1), st.floats(0.05, 1), st.floats(0.05, 0.95),
       st.floats(0.01, 0.99), st.floats(0.01, 0.99))
def test_consensus_cone_oracle(alpha, beta, r, tb, tr):
    p = ModelParams(alpha, beta, red_fraction=r)
    assume(abs(tb - 0.5) > 1e-2 and abs(tr - 0.5) > 1e-2 and regime_margin(p) > 1e-3)
    # stay away from the initial switching lines
    assume(min(abs(x) for x in drift_arguments(tb, tr, p)) > 1e-3)
    end = integrate_endpoint(PopulationState(tb, tr), p).as_array()
    corner = np.allclose(end, [1, 1], atol=1e-6) or np.allclose(end, [0, 0], atol=1e-6)
    assert corner == consensus_reachable(PopulationState(tb, tr), p)


def test_consensus_examples_integrate():
    assert np.allclose(integrate_endpoint(PopulationState(0.61, 0.6), CASE1).as_array(), 1)
    end = integrate_endpoint(PopulationState(0.7, 0.6), CASE1).as_array()
    assert np.allclose(end, [1, 0], atol=1e-9)


# -- stationary points and stability -------------------------------------------------

def test_stationary_corner():
    traj = integrate(PopulationState(0.7, 0.7), CASE1)
    rep = find_stationary(traj)
    assert rep.point.as_array() == pytest.approx([1.0, 1.0], abs=1e-12)
    assert rep.stability is None
    assert rep.reached_at is not None and rep.reached_at < 30
    exact = Trajectory(np.array([0.0, 1.0, 2.0]), np.array([[0.9, 0.9], [1, 1], [1, 1]]),
                       {"kind": "mean-field", "params": CASE1.to_dict()})
    rep = find_stationary(exact)
    assert rep.point == PopulationState(1.0, 1.0) and rep.reached_at == 1.0


def test_stationary_not_reached():
    traj = integrate(PopulationState(0.7, 0.7), CASE1, IntegrationConfig(horizon_t=2))
    assert find_stationary(traj).reached_at is None


def test_stationary_finite_difference_path():
    t = np.linspace(0, 5, 51)
    theta = np.column_stack([np.minimum(1, 0.5 + 0.25 * t), np.full_like(t, 0.3)])
    rep = find_stationary(Trajectory(t, theta, {"kind": "stochastic"}))
    assert rep.reached_at == pytest.approx(2.0)


@pytest.mark.parametrize("point, params, expected", [
    ((1.0, 1.0), CASE1, Stability.STABLE),
    ((0.5, 0.5), CASE4, Stability.UNSTABLE),
    ((0.0, 1.0), CASE2, Stability.STABLE),
    ((0.5, 0.5), CASE1, Stability.UNSTABLE),
])
def test_stability_probe(point, params, expected):
    assert stability_probe(PopulationState(*point), params) is expected


def test_probe_rejects_moving_point():
    with pytest.raises(ValueError, match="not stationary"):
        stability_probe(PopulationState(0.7, 0.7), CASE1)


# -- sup distance ------------------------------------------------------------------

def test_sup_distance_identical():
    traj = integrate(PopulationState(0.7, 0.6), CASE2)
    assert sup_distance(traj, traj) == 0.0


def test_sup_distance_constant_corners():
    t = np.array([0.0, 1.0, 2.0])
    a = Trajectory(t, np.zeros((3, 2)), {"kind": "mean-field"})
    b = Trajectory(t, np.ones((3, 2)), {"kind": "mean-field"})
    assert sup_distance(a, b) == pytest.approx(math.sqrt(2))


def test_sup_distance_disjoint():
    a = Trajectory(np.array([0.0, 1.0]), np.zeros((2, 2)))
    b = Trajectory(np.array([2.0, 3.0]), np.zeros((2, 2)))
    with pytest.raises(ValueError, match="disjoint"):
        sup_distance(a, b)


def test_sup_distance_uses_left_limits_for_jumps():
    # a step path jumping at t=1 against a linear ramp
    a = Trajectory(np.array([0.0, 1.0, 2.0]), np.array([[0, 0], [1, 0], [1, 0]], float),
                   {"kind": "stochastic"})
    b = Trajectory(np.array([0.0, 2.0]), np.array([[0, 0], [1, 0]], float),
                   {"kind": "mean-field"})
    # just before t=1: a is still 0, b is 0.5
    assert sup_distance(a, b) == pytest.approx(0.5)


def test_integration_config_validation():
    with pytest.raises(ValueError):
        IntegrationConfig(step_h=0)
    with pytest.raises(ValueError):
        IntegrationConfig(step_h=0.1, horizon_t=0.01)
