import numpy as np
import pytest

from scalarflow.fields import ScalarSpectralField, build_index_set
from scalarflow.solver import (
    AssemblyStructure,
    ObservationOperator,
    ObservationSpec,
    SolverConfig,
    assemble_generator,
    evaluate_point,
    forward_map,
    project_initial_condition,
    solve_forward,
)


def single_mode_theta(k, amp, cutoff):
    return ScalarSpectralField.from_modes(
        cutoff, {k: amp, (-k[0], -k[1]): np.conj(amp)})


def zero_field():
    return build_index_set(1).from_components(np.zeros(6))


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(4, kappa=0.1, dt=-1e-3, t_final=1.0)
    with pytest.raises(ValueError):
        SolverConfig(4, kappa=0.0, dt=1e-3, t_final=1.0)
    with pytest.raises(ValueError):
        SolverConfig(4, kappa=0.1, dt=1e-3, t_final=1e-4)
    cfg = SolverConfig(4, kappa=0.1, dt=0.01, t_final=1.0)
    assert cfg.n_steps == 100
    assert len(cfg.times) == 101
    assert cfg.times[-1] == pytest.approx(1.0)


def test_heat_decay_matches_analytic_factor():
    kappa = 0.282
    cfg = SolverConfig(4, kappa=kappa, dt=1e-3, t_final=0.1)
    theta0 = single_mode_theta((1, 0), 0.5, 4)
    traj = solve_forward(zero_field(), theta0, cfg)
    got = traj.state_field(cfg.n_steps).mode((1, 0))
    expected = 0.5 * np.exp(-4 * np.pi**2 * kappa * 0.1)
    assert abs(got - expected) / abs(expected) < 1e-3


def test_heat_decay_multiple_modes():
    kappa = 0.05
    cfg = SolverConfig(5, kappa=kappa, dt=5e-4, t_final=0.2)
    modes = {(1, 0): 0.5, (2, 1): 0.1 - 0.3j, (0, 3): 0.2j}
    theta0 = ScalarSpectralField.from_modes(
        5, {**modes, **{(-k[0], -k[1]): np.conj(c) for k, c in modes.items()}})
    traj = solve_forward(zero_field(), theta0, cfg)
    final = traj.state_field(cfg.n_steps)
    for k, c in modes.items():
        decay = np.exp(-4 * np.pi**2 * kappa * (k[0]**2 + k[1]**2) * 0.2)
        assert abs(final.mode(k) - c * decay) < 1e-3 * abs(c * decay)


def test_laminar_flow_does_not_stir_parallel_modes():
    # flow mode k = (0,1) moves fluid along x only; a scalar varying only in
    # y is transported to itself, so the solve must equal pure diffusion.
    idx = build_index_set(1)
    v = np.zeros(idx.component_count)
    v[2 + 2 * idx.slot((0, 1))] = 3.0
    field = idx.from_components(v)
    cfg = SolverConfig(6, kappa=0.1, dt=1e-3, t_final=0.05)
    theta0 = single_mode_theta((0, 2), 0.25 + 0.1j, 6)
    stirred = solve_forward(field, theta0, cfg)
    diffused = solve_forward(zero_field(), theta0, cfg)
    assert np.max(np.abs(stirred.states - diffused.states)) <= 1e-12


def test_mean_is_conserved(rng):
    idx = build_index_set(3)
    field = idx.from_components(rng.standard_normal(idx.component_count))
    theta0 = ScalarSpectralField.from_modes(
        6, {(0, 0): 0.5, (1, 0): -0.125, (-1, 0): -0.125,
            (2, 1): 0.1j, (-2, -1): -0.1j})
    cfg = SolverConfig(6, kappa=0.05, dt=1e-3, t_final=0.05)
    traj = solve_forward(field, theta0, cfg)
    assert np.max(np.abs(traj.mean_mode() - 0.5)) <= 1e-12


def test_crank_nicolson_second_order(rng):
    idx = build_index_set(2)
    field = idx.from_components(0.5 * rng.standard_normal(idx.component_count))
    theta0 = ScalarSpectralField.from_modes(
        4, {(1, 0): 0.3, (-1, 0): 0.3, (0, 2): 0.1j, (0, -2): -0.1j})
    t_final = 0.05

    def final_state(dt):
        cfg = SolverConfig(4, kappa=0.1, dt=dt, t_final=t_final)
        return solve_forward(field, theta0, cfg).states[-1]

    ref = final_state(3.125e-4)
    err_coarse = np.max(np.abs(final_state(5e-3) - ref))
    err_fine = np.max(np.abs(final_state(2.5e-3) - ref))
    assert 3.5 <= err_coarse / err_fine <= 4.5


def test_maximum_principle(ex1_small):
    traj = solve_forward(ex1_small.true_field(),
                         ex1_small.theta0(ex1_small.solver.scalar_cutoff),
                         ex1_small.solver)
    theta0_max = ex1_small.theta0(ex1_small.solver.scalar_cutoff)
    grid0 = theta0_max.to_grid(64)
    assert traj.max_on_grid(64) <= grid0.max() + 1e-6


def test_assembly_structure_matches_general_path(rng):
    idx = build_index_set(3)
    v = rng.standard_normal(idx.component_count)
    v[:2] = rng.standard_normal(2)  # exercise mean flow too
    field = idx.from_components(v)
    cutoff, kappa = 5, 0.07
    general = assemble_generator(field, cutoff, kappa, index_set=idx)
    fast = AssemblyStructure(idx, cutoff).assemble(v, kappa)
    np.testing.assert_allclose(np.asarray(fast.matrix), np.asarray(general.matrix),
                               atol=1e-14)


def test_observation_operator_matches_pointwise_evaluation(rng):
    idx = build_index_set(2)
    field = idx.from_components(0.3 * rng.standard_normal(idx.component_count))
    theta0 = ScalarSpectralField.from_modes(
        4, {(0, 0): 0.5, (1, 0): -0.125, (-1, 0): -0.125,
            (0, 1): -0.125, (0, -1): -0.125})
    cfg = SolverConfig(4, kappa=0.1, dt=0.01, t_final=0.5)
    times = rng.uniform(0.05, 0.5, size=7)
    points = rng.uniform(size=(7, 2))
    spec = ObservationSpec(times=times, points=points)
    traj = solve_forward(field, theta0, cfg)
    op = ObservationOperator(spec, cfg)
    got = op.apply(traj)
    expected = [evaluate_point(traj, t, x) for t, x in zip(times, points)]
    np.testing.assert_allclose(got, expected, atol=1e-12)
    np.testing.assert_allclose(forward_map(field, theta0, spec, cfg), got, atol=1e-12)


def test_time_interpolation_is_linear():
    cfg = SolverConfig(2, kappa=0.1, dt=0.1, t_final=0.3)
    theta0 = single_mode_theta((1, 0), 0.4, 2)
    traj = solve_forward(zero_field(), theta0, cfg)
    t = 0.137
    i = int(t / cfg.dt)
    alpha = (t - cfg.times[i]) / cfg.dt
    expected = (1 - alpha) * traj.states[i] + alpha * traj.states[i + 1]
    np.testing.assert_allclose(traj.interpolated_state(t), expected, atol=1e-15)


def test_observation_spec_json_round_trip(rng):
    spec = ObservationSpec(times=rng.uniform(size=4), points=rng.uniform(size=(4, 2)))
    back = ObservationSpec.from_json_list(spec.to_json_list())
    np.testing.assert_array_equal(back.times, spec.times)
    np.testing.assert_array_equal(back.points, spec.points)


def test_project_initial_condition_round_trip():
    theta0 = single_mode_theta((1, 0), 0.25, 3)
    state = project_initial_condition(theta0, 5)
    cfg = SolverConfig(5, kappa=0.1, dt=0.01, t_final=0.01)
    traj = solve_forward(zero_field(), theta0, cfg)
    np.testing.assert_allclose(traj.states[0], state)
    assert traj.state_field(0).mode((1, 0)) == pytest.approx(0.25)
