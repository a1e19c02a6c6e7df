"""MCMC kernels over flow-component vectors: pCN, independence, MALA, HMC.

All kernels target the measure with density proportional to
exp(-Phi(v)) against the Gaussian prior N(0, diag(sigma^2)), and are
well defined on the pinned subspace (components with sigma = 0 stay at
zero). Solve accounting per step:

    pcn / independence   1 forward
    mala                 1 forward + 1 adjoint (current-state gradient cached)
    hmc                  L + 1 forward + L adjoint (L leapfrog steps)
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field as dataclass_field
from pathlib import Path
from typing import Callable, Protocol

import numpy as np

from .adjoint import GradientWorkspace, SolveCounters, gradient_potential
from .fields import FlowIndexSet
from .inference import NoiseModel, ObservationSet
from .solver import (
    AssemblyStructure,
    ObservationOperator,
    SolverConfig,
    StepOperator,
    solve_forward,
)

__all__ = [
    "Target",
    "PDETarget",
    "GaussianLinearTarget",
    "ChainState",
    "KernelParams",
    "pcn_step",
    "independence_step",
    "mala_step",
    "hmc_step",
    "KERNELS",
    "initial_chain_state",
    "run_chain",
    "ChainRecord",
    "rng_state_to_json",
    "rng_from_json",
]


class Target(Protocol):
    """Posterior target: prior scale vector plus (counted) misfit evaluations."""

    sigma: np.ndarray
    counters: SolveCounters

    def potential(self, v: np.ndarray) -> float: ...

    def potential_and_gradient(self, v: np.ndarray) -> tuple[float, np.ndarray]: ...


class PDETarget:
    """Misfit of the advection-diffusion forward map at a component vector."""

    def __init__(self, obs: ObservationSet, noise: NoiseModel, theta0,
                 config: SolverConfig, index_set: FlowIndexSet, sigma: np.ndarray):
        self.obs = obs
        self.noise = noise
        self.theta0 = theta0
        self.config = config
        self.index_set = index_set
        self.sigma = np.asarray(sigma, dtype=float)
        self.counters = SolveCounters()
        self._obs_operator = ObservationOperator(obs.spec, config)
        self._assembly = AssemblyStructure(index_set, config.scalar_cutoff)
        self._workspace = GradientWorkspace(index_set, config)

    def potential(self, v: np.ndarray) -> float:
        if len(self.obs.spec) == 0:
            return 0.0
        field = self.index_set.from_components(v)
        gen = self._assembly.assemble(np.asarray(v, dtype=float), self.config.kappa)
        op = StepOperator(gen, self.config.dt)
        traj = solve_forward(field, self.theta0, self.config, operator=op,
                             index_set=self.index_set)
        self.counters.forward += 1
        g = self._obs_operator.apply(traj)
        r = self.obs.y - g
        return 0.5 * float(r @ r) / self.noise.sigma**2

    def potential_and_gradient(self, v: np.ndarray) -> tuple[float, np.ndarray]:
        if len(self.obs.spec) == 0:
            return 0.0, np.zeros(self.index_set.component_count)
        field = self.index_set.from_components(v)
        result = gradient_potential(
            field, self.obs.y, self.theta0, self.obs.spec, self.config,
            self.index_set, self.noise.sigma,
            workspace=self._workspace, obs_operator=self._obs_operator,
            counters=self.counters, assembly=self._assembly)
        return result.phi, result.gradient


class GaussianLinearTarget:
    """Phi(v) = |y - B v|^2 / (2 sigma_noise^2): conjugate Gaussian toy.

    Mirrors the PDE target's counter contract so kernel accounting can be
    checked without PDE solves.
    """

    def __init__(self, design: np.ndarray, y: np.ndarray, sigma_noise: float,
                 sigma: np.ndarray):
        self.design = np.asarray(design, dtype=float)
        self.y = np.asarray(y, dtype=float)
        self.sigma_noise = sigma_noise
        self.sigma = np.asarray(sigma, dtype=float)
        self.counters = SolveCounters()

    def potential(self, v: np.ndarray) -> float:
        self.counters.forward += 1
        r = self.y - self.design @ v
        return 0.5 * float(r @ r) / self.sigma_noise**2

    def potential_and_gradient(self, v: np.ndarray) -> tuple[float, np.ndarray]:
        self.counters.forward += 1
        self.counters.adjoint += 1
        r = self.y - self.design @ v
        phi = 0.5 * float(r @ r) / self.sigma_noise**2
        return phi, -(self.design.T @ r) / self.sigma_noise**2

    def posterior_moments(self) -> tuple[np.ndarray, np.ndarray]:
        """Exact posterior mean and covariance (requires sigma > 0)."""
        prior_prec = np.diag(1.0 / self.sigma**2)
        prec = prior_prec + self.design.T @ self.design / self.sigma_noise**2
        cov = np.linalg.inv(prec)
        mean = cov @ (self.design.T @ self.y) / self.sigma_noise**2
        return mean, cov


@dataclass
class ChainState:
    v: np.ndarray
    phi: float
    grad: np.ndarray | None = None


@dataclass(frozen=True)
class KernelParams:
    beta: float = 0.2
    h: float = 0.005
    epsilon: float = 0.1
    tau: float = 1.0

    def to_json_dict(self) -> dict:
        return {"beta": self.beta, "h": self.h,
                "epsilon": self.epsilon, "tau": self.tau}


def _prior_quad(v: np.ndarray, sigma: np.ndarray) -> float:
    active = sigma > 0
    return float(np.sum((v[active] / sigma[active]) ** 2))


def pcn_step(state: ChainState, target: Target, params: KernelParams,
             rng: np.random.Generator) -> tuple[ChainState, bool]:
    beta = params.beta
    xi = target.sigma * rng.standard_normal(len(state.v))
    proposal = np.sqrt(1.0 - beta**2) * state.v + beta * xi
    phi_new = target.potential(proposal)
    if np.log(rng.uniform()) < state.phi - phi_new:
        return ChainState(proposal, phi_new), True
    return state, False


def independence_step(state: ChainState, target: Target, params: KernelParams,
                      rng: np.random.Generator) -> tuple[ChainState, bool]:
    """Fresh prior draw; identical to pCN at beta = 1."""
    return pcn_step(state, target, KernelParams(beta=1.0), rng)


def mala_step(state: ChainState, target: Target, params: KernelParams,
              rng: np.random.Generator) -> tuple[ChainState, bool]:
    h = params.h
    sigma = target.sigma
    if state.grad is None:
        state.grad = target.potential_and_gradient(state.v)[1]
    v, grad_v = state.v, state.grad
    xi = sigma * rng.standard_normal(len(v))
    w = ((2.0 - h) / (2.0 + h)) * v \
        - (2.0 * h / (2.0 + h)) * sigma**2 * grad_v \
        + (np.sqrt(8.0 * h) / (2.0 + h)) * xi
    phi_w, grad_w = target.potential_and_gradient(w)

    def rho(a, phi_a, grad_a, b):
        return (phi_a + 0.5 * float((b - a) @ grad_a)
                + 0.25 * h * float((a + b) @ grad_a)
                + 0.25 * h * float(np.sum((sigma * grad_a) ** 2)))

    log_alpha = rho(v, state.phi, grad_v, w) - rho(w, phi_w, grad_w, v)
    if np.isfinite(log_alpha) and np.log(rng.uniform()) < log_alpha:
        return ChainState(w, phi_w, grad_w), True
    return state, False


def hmc_step(state: ChainState, target: Target, params: KernelParams,
             rng: np.random.Generator) -> tuple[ChainState, bool]:
    """Preconditioned HMC with exact integration of the Gaussian-prior part.

    Each leapfrog step kicks with the misfit gradient and rotates (q, w)
    through angle epsilon, which integrates the prior Hamiltonian exactly.
    """
    eps = params.epsilon
    n_leapfrog = max(1, int(round(params.tau / eps)))
    sigma = target.sigma
    if state.grad is None:
        state.grad = target.potential_and_gradient(state.v)[1]
    w = sigma * rng.standard_normal(len(state.v))
    h0 = state.phi + 0.5 * (_prior_quad(state.v, sigma) + _prior_quad(w, sigma))
    q, grad = state.v.copy(), state.grad
    grad_end = grad
    for _ in range(n_leapfrog):
        w = w - 0.5 * eps * sigma**2 * grad
        q, w = q * np.cos(eps) + w * np.sin(eps), -q * np.sin(eps) + w * np.cos(eps)
        _, grad = target.potential_and_gradient(q)
        w = w - 0.5 * eps * sigma**2 * grad
        grad_end = grad
    phi_end = target.potential(q)
    h1 = phi_end + 0.5 * (_prior_quad(q, sigma) + _prior_quad(w, sigma))
    log_alpha = h0 - h1
    if np.isfinite(log_alpha) and np.log(rng.uniform()) < log_alpha:
        return ChainState(q, phi_end, grad_end), True
    return state, False


KERNELS: dict[str, Callable] = {
    "pcn": pcn_step,
    "independence": independence_step,
    "mala": mala_step,
    "hmc": hmc_step,
}


@dataclass
class ChainRecord:
    kernel: str
    params: KernelParams
    samples: np.ndarray
    phis: np.ndarray
    accepts: np.ndarray
    counters: SolveCounters = dataclass_field(default_factory=SolveCounters)
    final_state: ChainState | None = None

    @property
    def acceptance_rate(self) -> float:
        return float(np.mean(self.accepts)) if len(self.accepts) else 0.0

    def write_trace_csv(self, path):
        path = Path(path)
        d = self.samples.shape[1]
        with path.open("w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["step", "phi", "accept"] + [f"c{i}" for i in range(d)])
            for i in range(len(self.phis)):
                writer.writerow([i, repr(float(self.phis[i])), int(self.accepts[i])]
                                + [repr(float(x)) for x in self.samples[i]])

    @staticmethod
    def read_trace_csv(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Returns (samples, phis, accepts) from a trace file."""
        with Path(path).open(newline="") as f:
            reader = csv.reader(f)
            header = next(reader)
            d = len(header) - 3
            samples, phis, accepts = [], [], []
            for row in reader:
                phis.append(float(row[1]))
                accepts.append(bool(int(row[2])))
                samples.append([float(x) for x in row[3:3 + d]])
        return np.array(samples), np.array(phis), np.array(accepts)


def initial_chain_state(target: Target, kernel: str, v) -> ChainState:
    """Evaluate the potential (and gradient, for kernels that use one) at the
    starting point, so the per-step solve counts are exact from step one."""
    v = np.asarray(v, dtype=float)
    if kernel in ("mala", "hmc"):
        phi, grad = target.potential_and_gradient(v)
        return ChainState(v, phi, grad)
    return ChainState(v, target.potential(v))


def rng_state_to_json(rng: np.random.Generator) -> str:
    return json.dumps(rng.bit_generator.state)


def rng_from_json(text: str) -> np.random.Generator:
    state = json.loads(text)
    rng = np.random.Generator(getattr(np.random, state["bit_generator"])())
    rng.bit_generator.state = state
    return rng


def run_chain(target: Target, kernel: str, params: KernelParams, n_steps: int,
              rng: np.random.Generator,
              initial: np.ndarray | None = None,
              initial_state: ChainState | None = None,
              progress: Callable[[int, ChainState], None] | None = None) -> ChainRecord:
    """Run one chain, recording every state after the initial one."""
    step = KERNELS[kernel]
    if initial_state is None:
        if initial is None:
            initial = np.zeros(len(target.sigma))
        initial_state = initial_chain_state(target, kernel, initial)
    state = initial_state
    d = len(state.v)
    samples = np.empty((n_steps, d))
    phis = np.empty(n_steps)
    accepts = np.zeros(n_steps, dtype=bool)
    for i in range(n_steps):
        state, accepted = step(state, target, params, rng)
        samples[i] = state.v
        phis[i] = state.phi
        accepts[i] = accepted
        if progress is not None:
            progress(i, state)
    return ChainRecord(kernel, params, samples, phis, accepts,
                       counters=target.counters.snapshot(), final_state=state)
