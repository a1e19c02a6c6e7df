"""Kraichnan Gaussian prior, Gaussian-noise potential, and synthetic data."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import DivFreeVelocityField, FlowIndexSet
from .solver import (
    ObservationOperator,
    ObservationSpec,
    SolverConfig,
    forward_map,
)

__all__ = [
    "kraichnan_energy",
    "KraichnanPrior",
    "NoiseModel",
    "ObservationSet",
    "potential",
    "generate_data",
]


def kraichnan_energy(k, e0: float, n_subfields: int, xi: float):
    """Energy spectrum E(k) = E0 sum_i (k/k_i)^4 exp(-1.5 (k/k_i)^2) k_i^{-xi},
    with subfield wave numbers k_i = sqrt(2)^i for i = 0..N."""
    k = np.asarray(k, dtype=float)
    if np.any(k <= 0):
        raise ValueError("wave number must be positive")
    k_i = np.sqrt(2.0) ** np.arange(n_subfields + 1)
    ratio = k[..., None] / k_i
    e = e0 * np.sum(ratio**4 * np.exp(-1.5 * ratio**2) * k_i**(-xi), axis=-1)
    return e if e.shape else float(e)


class KraichnanPrior:
    """Diagonal Gaussian over flow components with Kraichnan-spectrum decay.

    Each cosine/sine amplitude of a mode with |k| = r has variance
    E(r) / (2 pi r); the two mean-flow components get mean_flow_var
    (default 0, pinning the mean flow, since the spectrum is singular at
    k = 0).
    """

    def __init__(self, e0: float, n_subfields: int, xi: float,
                 index_set: FlowIndexSet, mean_flow_var: float = 0.0):
        self.e0 = e0
        self.n_subfields = n_subfields
        self.xi = xi
        self.index_set = index_set
        self.mean_flow_var = mean_flow_var
        sigma2 = np.zeros(index_set.component_count)
        sigma2[0:2] = mean_flow_var
        if e0 > 0:
            norms = index_set.rep_norm
            var = kraichnan_energy(norms, e0, n_subfields, xi) / (2.0 * np.pi * norms)
            sigma2[2::2] = var
            sigma2[3::2] = var
        self.sigma = np.sqrt(sigma2)

    @staticmethod
    def e0_for_unit_mode_sigma(target_sigma: float, n_subfields: int, xi: float) -> float:
        """E0 such that the |k| = 1 component standard deviation is target_sigma."""
        base = kraichnan_energy(1.0, 1.0, n_subfields, xi) / (2.0 * np.pi)
        return target_sigma**2 / base

    def sample_components(self, rng: np.random.Generator) -> np.ndarray:
        return self.sigma * rng.standard_normal(self.index_set.component_count)

    def sample(self, rng: np.random.Generator) -> DivFreeVelocityField:
        return self.index_set.from_components(self.sample_components(rng))

    def energy(self, k) :
        return kraichnan_energy(k, self.e0, self.n_subfields, self.xi)

    def to_json_dict(self) -> dict:
        return {
            "e0": self.e0,
            "n": self.n_subfields,
            "xi": self.xi,
            "mean_flow_var": self.mean_flow_var,
        }


@dataclass(frozen=True)
class NoiseModel:
    sigma: float

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("noise standard deviation must be positive")


@dataclass(frozen=True)
class ObservationSet:
    y: np.ndarray
    spec: ObservationSpec

    def __post_init__(self):
        object.__setattr__(self, "y", np.asarray(self.y, dtype=float))
        if len(self.y) != len(self.spec):
            raise ValueError("data vector and observation spec lengths differ")


def potential(field: DivFreeVelocityField, obs: ObservationSet, noise: NoiseModel,
              theta0, config: SolverConfig,
              index_set: FlowIndexSet | None = None,
              obs_operator: ObservationOperator | None = None) -> float:
    """Phi(v; Y) = (1/2) sigma^-2 sum_j (Y_j - G_j(v))^2."""
    if len(obs.spec) == 0:
        return 0.0
    g = forward_map(field, theta0, obs.spec, config, index_set=index_set,
                    obs_operator=obs_operator)
    r = obs.y - g
    return 0.5 * float(r @ r) / noise.sigma**2


def generate_data(true_field: DivFreeVelocityField, theta0, spec: ObservationSpec,
                  noise: NoiseModel, config: SolverConfig,
                  add_noise: bool = False,
                  rng: np.random.Generator | None = None,
                  index_set: FlowIndexSet | None = None) -> ObservationSet:
    """Y = G(v*), optionally plus N(0, sigma^2) draws per observation."""
    y = forward_map(true_field, theta0, spec, config, index_set=index_set)
    if add_noise:
        if rng is None:
            raise ValueError("add_noise requires a seeded rng")
        y = y + noise.sigma * rng.standard_normal(len(y))
    return ObservationSet(y=y, spec=spec)
