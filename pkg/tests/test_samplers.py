import numpy as np
import pytest

from scalarflow.samplers import (
    ChainRecord,
    GaussianLinearTarget,
    KernelParams,
    PDETarget,
    initial_chain_state,
    rng_from_json,
    rng_state_to_json,
    run_chain,
)


def toy_target(seed=0):
    rng = np.random.default_rng(seed)
    design = np.array([[1.0, 0.4], [-0.3, 1.2], [0.5, 0.5]])
    v_true = np.array([0.8, -0.5])
    y = design @ v_true + 0.3 * rng.standard_normal(3)
    return GaussianLinearTarget(design, y, sigma_noise=0.3,
                                sigma=np.array([1.0, 1.5]))


def test_posterior_moments_match_direct_formula():
    t = toy_target()
    mean, cov = t.posterior_moments()
    prec = np.diag([1.0, 1.0 / 1.5**2]) + t.design.T @ t.design / 0.09
    cov_direct = np.linalg.inv(prec)
    np.testing.assert_allclose(cov, cov_direct, rtol=1e-12)
    np.testing.assert_allclose(mean, cov_direct @ t.design.T @ t.y / 0.09,
                               rtol=1e-12)


@pytest.mark.parametrize("kernel,params", [
    ("pcn", KernelParams(beta=0.4)),
    ("independence", KernelParams()),
    ("mala", KernelParams(h=0.01)),
    ("hmc", KernelParams(epsilon=0.4, tau=1.2)),
])
def test_kernels_target_the_posterior(kernel, params):
    target = toy_target()
    mean, cov = target.posterior_moments()
    rec = run_chain(target, kernel, params, 20000, np.random.default_rng(42))
    burn = rec.samples[2000:]
    # effective-sample-size-adjusted standard error, crude upper bound
    for j in range(2):
        x = burn[:, j]
        ac = np.corrcoef(x[:-1], x[1:])[0, 1]
        ess = len(x) * (1 - ac) / (1 + ac)
        se = np.sqrt(cov[j, j] / max(ess, 10))
        assert abs(x.mean() - mean[j]) < 4 * se
        assert abs(x.var() - cov[j, j]) < 0.25 * cov[j, j] + 4 * se**2


def test_independence_sampler_is_pcn_beta_one():
    a = run_chain(toy_target(), "independence", KernelParams(), 500,
                  np.random.default_rng(5))
    b = run_chain(toy_target(), "pcn", KernelParams(beta=1.0), 500,
                  np.random.default_rng(5))
    np.testing.assert_array_equal(a.samples, b.samples)
    np.testing.assert_array_equal(a.accepts, b.accepts)


@pytest.mark.parametrize("kernel,params,fwd_per_step,adj_per_step,init_fwd,init_adj", [
    ("pcn", KernelParams(beta=0.3), 1, 0, 1, 0),
    ("independence", KernelParams(), 1, 0, 1, 0),
    ("mala", KernelParams(h=0.1), 1, 1, 1, 1),
    ("hmc", KernelParams(epsilon=0.25, tau=1.0), 5, 4, 1, 1),  # L = 4
])
def test_solve_count_contract(kernel, params, fwd_per_step, adj_per_step,
                              init_fwd, init_adj):
    n = 37
    target = toy_target()
    rec = run_chain(target, kernel, params, n, np.random.default_rng(1))
    assert rec.counters.forward == init_fwd + n * fwd_per_step
    assert rec.counters.adjoint == init_adj + n * adj_per_step


def test_hmc_step_count_rounds_tau_over_epsilon():
    # tau = 1, epsilon = 0.3 -> L = round(10/3) = 3 -> 4 forwards, 3 adjoints
    target = toy_target()
    run_chain(target, "hmc", KernelParams(epsilon=0.3, tau=1.0), 10,
              np.random.default_rng(1))
    assert target.counters.forward == 1 + 10 * 4
    assert target.counters.adjoint == 1 + 10 * 3


def test_trace_csv_round_trip(tmp_path):
    rec = run_chain(toy_target(), "pcn", KernelParams(beta=0.4), 50,
                    np.random.default_rng(9))
    path = tmp_path / "trace.csv"
    rec.write_trace_csv(path)
    samples, phis, accepts = ChainRecord.read_trace_csv(path)
    np.testing.assert_array_equal(samples, rec.samples)
    np.testing.assert_array_equal(phis, rec.phis)
    np.testing.assert_array_equal(accepts, rec.accepts)


def test_rng_state_json_round_trip():
    rng = np.random.default_rng(123)
    rng.standard_normal(17)
    saved = rng_state_to_json(rng)
    expected = rng.standard_normal(5)
    restored = rng_from_json(saved)
    np.testing.assert_array_equal(restored.standard_normal(5), expected)


def test_run_chain_resume_is_bitwise():
    params = KernelParams(beta=0.4)
    rng = np.random.default_rng(21)
    full = run_chain(toy_target(), "pcn", params, 40, rng)

    rng = np.random.default_rng(21)
    first = run_chain(toy_target(), "pcn", params, 15, rng)
    # carry rng through JSON, as the CLI checkpoint does
    rng2 = rng_from_json(rng_state_to_json(rng))
    second = run_chain(toy_target(), "pcn", params, 25, rng2,
                       initial_state=first.final_state)
    np.testing.assert_array_equal(
        np.vstack([first.samples, second.samples]), full.samples)


def test_initial_state_gradients_only_where_needed():
    t1 = toy_target()
    s = initial_chain_state(t1, "pcn", np.zeros(2))
    assert s.grad is None and t1.counters.adjoint == 0
    t2 = toy_target()
    s = initial_chain_state(t2, "hmc", np.zeros(2))
    assert s.grad is not None and t2.counters.adjoint == 1


def test_pcn_preserves_prior_with_flat_potential():
    class Flat:
        sigma = np.array([1.0, 2.0])

        def __init__(self):
            from scalarflow.adjoint import SolveCounters
            self.counters = SolveCounters()

        def potential(self, v):
            return 0.0

        def potential_and_gradient(self, v):
            return 0.0, np.zeros_like(v)

    rec = run_chain(Flat(), "pcn", KernelParams(beta=0.7), 20000,
                    np.random.default_rng(3))
    assert rec.acceptance_rate == 1.0
    sd = rec.samples[500:].std(axis=0)
    np.testing.assert_allclose(sd, [1.0, 2.0], rtol=0.1)


def test_pde_target_zero_observations_short_circuits(ex2_small):
    from scalarflow.inference import ObservationSet
    from scalarflow.solver import ObservationSpec

    idx = ex2_small.index_set()
    spec = ObservationSpec(times=np.zeros(0), points=np.zeros((0, 2)))
    target = PDETarget(ObservationSet(np.zeros(0), spec), ex2_small.noise(),
                       ex2_small.theta0(), ex2_small.solver, idx,
                       ex2_small.prior_measure().sigma)
    v = np.ones(idx.component_count)
    assert target.potential(v) == 0.0
    phi, grad = target.potential_and_gradient(v)
    assert phi == 0.0
    np.testing.assert_array_equal(grad, np.zeros_like(v))
