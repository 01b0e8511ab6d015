import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import matrix_exponential

from dagplatoon.control import GainSet, SynthesisRecipe, stability_verdict
from dagplatoon.dynamics import VehicleParams
from dagplatoon.graph import random_dag, standard_topology
from dagplatoon.presets import formula_vehicles, nonlinear_scenario, table1_gains, table1_scenario, table1_vehicles
from dagplatoon.sim import (
    InitialOffsets,
    LeaderProfile,
    NotConverged,
    NumericalFailure,
    Scenario,
    Segment,
    Trajectory,
    constant_profile,
    convergence_time,
    eq39_profile,
    eq40_profile,
    leader_state,
    linear_error_propagator,
    max_spacing_error,
    simulate,
)


def test_leader_before_ramp():
    p, v, a = leader_state(eq39_profile(), 2.0)
    assert (p, v, a) == (20.0, 10.0, 0.0)


def test_leader_during_ramp():
    # velocity is continuous at the start of the ramp: 10 + (t - 3)
    p, v, a = leader_state(eq39_profile(), 10.0)
    assert v == pytest.approx(17.0) and a == 1.0
    assert p == pytest.approx(30 + 10 * 7 + 0.5 * 49)


def test_leader_after_ramp():
    p, v, a = leader_state(eq39_profile(), 20.0)
    assert (v, a) == (22.0, 0.0)
    assert p == pytest.approx(30 + 120 + 72 + 22 * 5)


def test_unbounded_ramp():
    _, v, a = leader_state(eq40_profile(), 100.0)
    assert v == pytest.approx(107.0) and a == 1.0


@given(t=st.floats(0, 80))
def test_leader_position_integrates_velocity(t):
    prof = eq39_profile()
    h = 1e-4
    p1, v1, _ = leader_state(prof, t)
    p2, v2, _ = leader_state(prof, t + h)
    assert (p2 - p1) / h == pytest.approx(0.5 * (v1 + v2), abs=1e-6)


def test_follower_start_speed():
    s = table1_scenario("PF", horizon=1.0)
    traj = simulate(s)
    np.testing.assert_array_equal(traj.states[0, :, 1], 20.0)
    np.testing.assert_array_equal(traj.errors[0, :, 1], 10.0)
    np.testing.assert_array_equal(traj.errors[0, :, 0], 0.0)
    with pytest.raises(ValueError):
        InitialOffsets(speed=-1.0)


def test_leader_validation():
    with pytest.raises(ValueError):
        leader_state(eq39_profile(), -0.1)
    with pytest.raises(ValueError):
        LeaderProfile((Segment(0, 10), Segment(3, 13, 1)))
    with pytest.raises(ValueError):
        LeaderProfile((Segment(1, 10),))
    with pytest.raises(ValueError):
        LeaderProfile((Segment(0, 10), Segment(0, 10)))


def test_equilibrium_is_invariant():
    s = table1_scenario("TPF", leader=constant_profile(25.0), initial=InitialOffsets(), horizon=30.0)
    traj = simulate(s)
    assert np.abs(traj.errors).max() <= 1e-9


def test_matches_matrix_exponential():
    rng = np.random.default_rng(3)
    init = InitialOffsets(tuple(rng.normal(size=7)), tuple(rng.normal(size=7)), tuple(rng.normal(size=7) * 0.3))
    s = table1_scenario("TPLF", leader=constant_profile(20.0), initial=init, horizon=8.0)
    traj = simulate(s)
    M = linear_error_propagator(s)
    e0 = traj.errors[0].ravel()
    expected = matrix_exponential(M * s.horizon) @ e0
    got = traj.errors[-1].ravel()
    assert np.linalg.norm(got - expected) <= 1e-6 * np.linalg.norm(expected)


@given(seed=st.integers(0, 10**6), n=st.integers(1, 5))
@settings(max_examples=15)
def test_random_dag_matches_matrix_exponential(seed, n):
    rng = np.random.default_rng(seed)
    t = random_dag(n, rng)
    vehicles = tuple(VehicleParams(x) for x in rng.uniform(0.2, 0.8, n))
    init = InitialOffsets(tuple(rng.normal(size=n)), tuple(rng.normal(size=n)))
    s = Scenario(vehicles, t, SynthesisRecipe.uniform(n, 2.0), leader=constant_profile(15.0), initial=init, horizon=4.0)
    traj = simulate(s)
    expected = matrix_exponential(linear_error_propagator(s) * s.horizon) @ traj.errors[0].ravel()
    assert np.linalg.norm(traj.errors[-1].ravel() - expected) <= 1e-6 * max(np.linalg.norm(expected), 1e-3)


def test_initial_errors_scale_linearly():
    init = InitialOffsets(position=(1.0, -0.5, 0.2, 0.0, 0.3, -0.1, 0.4))
    double = InitialOffsets(position=tuple(2 * x for x in init.position))
    base = table1_scenario("PF", leader=constant_profile(20.0), horizon=20.0)
    a = simulate(dataclasses.replace(base, initial=init))
    b = simulate(dataclasses.replace(base, initial=double))
    for i in range(7):
        assert max_spacing_error(b, i) == pytest.approx(2 * max_spacing_error(a, i), rel=1e-9)


def test_spacing_error_ordering():
    worst = {}
    for kind in ("PF", "TPF", "PLF", "TPLF"):
        traj = simulate(table1_scenario(kind))
        worst[kind] = max(max_spacing_error(traj, i) for i in range(1, 7))
    assert worst["PF"] > worst["TPF"] > worst["PLF"]
    assert worst["TPF"] > worst["TPLF"]
    assert abs(worst["PLF"] - worst["TPLF"]) <= 0.05 * max(worst["PLF"], worst["TPLF"])


def _trajectory(spacing):
    spacing = np.asarray(spacing, dtype=float)
    k, n = spacing.shape
    errors = np.zeros((k, n, 3))
    errors[:, :, 0] = spacing
    return Trajectory(np.arange(k) * 0.5, np.zeros((k, 3)), np.zeros((k, n, 3)), errors, np.zeros((k, n)))


def test_convergence_time_grid_semantics():
    assert convergence_time(_trajectory(np.zeros((5, 2)))) == 0.0
    tr = _trajectory([[0.5, 0], [0.05, 0.2], [0.0, 0.09], [0.11, 0.0], [0.0, 0.0]])
    assert convergence_time(tr, 0.1) == 1.5
    with pytest.raises(NotConverged):
        convergence_time(_trajectory([[0, 0], [0, 0.3]]), 0.1)
    assert max_spacing_error(_trajectory(np.zeros((3, 2))), 1) == 0.0


def test_unstable_gains_grow():
    s = table1_scenario("PF", unstable=True)
    traj = simulate(s)
    assert not stability_verdict(s.taus, s.gains(), s.topology).stable
    late = np.abs(traj.spacing_errors[-1]).max()
    mid = np.abs(traj.spacing_errors[len(traj.t) // 2]).max()
    assert late > mid > 1.0


def test_numerical_failure_reported():
    s = Scenario((VehicleParams(0.3),), standard_topology("PF", 1), GainSet(((-1e4, 0.0, 0.0),)),
                 leader=constant_profile(10.0), initial=InitialOffsets(position=(1.0,)), horizon=30.0)
    with pytest.raises(NumericalFailure) as info:
        simulate(s)
    assert 0 < info.value.t <= 30.0


def test_euler_close_to_rk4():
    s = table1_scenario("PLF", horizon=30.0)
    a = simulate(s)
    b = simulate(dataclasses.replace(s, integrator="euler"))
    assert np.abs(a.errors - b.errors).max() < 0.05 * np.abs(a.errors).max()


def test_exact_model_nonlinear_equals_linear():
    # nonlinear plant whose estimates are exact and no sliding layer: reduces to the linear lag model
    lin = table1_vehicles()
    vehicles = []
    for v, nl in zip(lin, formula_vehicles(7)):
        vehicles.append(VehicleParams(v.tau, nl.plant, nl.plant, v.tau))
    t = standard_topology("TPF", 7)
    s_nl = Scenario(tuple(vehicles), t, table1_gains(), plant="nonlinear", horizon=25.0)
    s_lin = Scenario(lin, t, table1_gains(), horizon=25.0)
    a, b = simulate(s_nl), simulate(s_lin)
    assert np.abs(a.errors - b.errors).max() < 1e-8


def test_nonlinear_records_sliding_and_torque():
    s = nonlinear_scenario("PLF", horizon=5.0)
    traj = simulate(s)
    assert traj.torque.shape == traj.inputs.shape == traj.sliding.shape
    assert np.all(traj.sliding[0] == 0)
    assert np.all(np.isfinite(traj.torque))


@pytest.mark.parametrize("change", [
    dict(dt=0.0), dict(horizon=0.001), dict(spacing=-1.0), dict(delta=0.0), dict(plant="hybrid"),
    dict(integrator="midpoint"), dict(k_s=0.3), dict(plant="nonlinear"),
    dict(initial=InitialOffsets(position=(1.0,))),
])
def test_scenario_validation(change):
    with pytest.raises(ValueError):
        dataclasses.replace(table1_scenario("PF"), **change)


def test_scenario_size_mismatch():
    with pytest.raises(ValueError):
        Scenario(table1_vehicles()[:3], standard_topology("PF", 4), SynthesisRecipe.uniform(4, 1.0))
    with pytest.raises(ValueError):
        Scenario(table1_vehicles(), standard_topology("PF", 7), SynthesisRecipe.uniform(6, 1.0))
