"""Divergence-free velocity fields and spectral scalar fields on the unit torus.

A velocity field is stored as a mean flow plus complex amplitudes v_k on a
half-lattice of wave vectors; the full coefficient set is implied by the
reality condition conj(v_k) = -v_{-k}.  Each mode contributes along the
unit direction k_perp / |k|, so every representable field is exactly
divergence-free.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

__all__ = [
    "WaveVector",
    "FlowIndexSet",
    "DivFreeVelocityField",
    "ScalarSpectralField",
    "build_index_set",
    "sobolev_norm",
    "shell_energy",
    "vorticity",
]

WaveVector = tuple[int, int]


def kperp_unit(k: WaveVector) -> np.ndarray:
    """Unit vector perpendicular to k, i.e. [-ky, kx] / |k|."""
    kx, ky = k
    norm = np.hypot(kx, ky)
    if norm == 0:
        raise ValueError("k = (0, 0) has no perpendicular direction")
    return np.array([-ky, kx], dtype=float) / norm


def _half_lattice(cutoff: float) -> list[WaveVector]:
    """Representatives {ky > 0} U {ky = 0, kx > 0} with |k|_2 <= cutoff."""
    kmax = int(np.floor(cutoff))
    reps = []
    for kx in range(-kmax, kmax + 1):
        for ky in range(0, kmax + 1):
            if ky == 0 and kx <= 0:
                continue
            if kx * kx + ky * ky <= cutoff * cutoff:
                reps.append((kx, ky))
    reps.sort(key=lambda k: (np.hypot(*k), k))
    return reps


class FlowIndexSet:
    """Canonical ordering of flow-mode representatives for a Euclidean cutoff.

    Component layout: indices 0, 1 hold the mean flow; representative j
    occupies indices 2 + 2j (cosine amplitude a_k) and 3 + 2j (sine
    amplitude b_k).  The bijection with complex mode amplitudes is
    a_k = 2 Re v_k, b_k = -2 Im v_k.
    """

    def __init__(self, cutoff: float):
        if cutoff < 1:
            raise ValueError(f"cutoff must be >= 1, got {cutoff}")
        self.cutoff = float(cutoff)
        self.representatives: list[WaveVector] = _half_lattice(cutoff)
        self.component_count = 2 + 2 * len(self.representatives)
        self._slot = {k: j for j, k in enumerate(self.representatives)}
        self.rep_k = np.array(self.representatives, dtype=int).reshape(-1, 2)
        norms = np.hypot(self.rep_k[:, 0], self.rep_k[:, 1])
        # unit directions k_perp / |k| per representative
        self.rep_unit = np.column_stack([-self.rep_k[:, 1], self.rep_k[:, 0]]) / norms[:, None]
        self.rep_norm = norms

    def slot(self, k: WaveVector) -> int:
        return self._slot[k]

    def __contains__(self, k: WaveVector) -> bool:
        return k in self._slot

    def __len__(self) -> int:
        return len(self.representatives)

    def to_components(self, field: "DivFreeVelocityField") -> np.ndarray:
        """Flat real component vector in canonical order."""
        values = np.zeros(self.component_count)
        values[0:2] = field.mean_flow
        for k, vk in field.modes.items():
            if k not in self._slot:
                raise ValueError(f"field mode {k} not in index set (cutoff {self.cutoff})")
            j = self._slot[k]
            values[2 + 2 * j] = 2.0 * vk.real
            values[3 + 2 * j] = -2.0 * vk.imag
        return values

    def from_components(self, values: np.ndarray) -> "DivFreeVelocityField":
        values = np.asarray(values, dtype=float)
        if values.shape != (self.component_count,):
            raise ValueError(
                f"expected {self.component_count} components, got {values.shape}"
            )
        modes = {}
        for j, k in enumerate(self.representatives):
            a = values[2 + 2 * j]
            b = values[3 + 2 * j]
            if a != 0.0 or b != 0.0:
                modes[k] = 0.5 * (a - 1j * b)
        return DivFreeVelocityField(mean_flow=(values[0], values[1]), modes=modes)

    def full_coefficients(self, field: "DivFreeVelocityField"):
        """Physical Fourier coefficients c_k = v_k k_perp/|k| over both signs.

        Returns (k_array, c_array): integer wave vectors of shape (2m, 2) and
        complex coefficient vectors of shape (2m, 2), plus the mean flow is
        NOT included (it is the k = 0 coefficient).
        """
        ks = []
        cs = []
        for k, vk in field.modes.items():
            u = kperp_unit(k)
            ks.append(k)
            cs.append(vk * u)
            ks.append((-k[0], -k[1]))
            cs.append(-np.conj(vk) * (-u))
        if not ks:
            return np.zeros((0, 2), dtype=int), np.zeros((0, 2), dtype=complex)
        return np.array(ks, dtype=int), np.array(cs, dtype=complex)

    def to_json_dict(self) -> dict:
        return {
            "cutoff": self.cutoff,
            "representatives": [[int(kx), int(ky)] for kx, ky in self.representatives],
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "FlowIndexSet":
        idx = cls(d["cutoff"])
        stored = [tuple(k) for k in d["representatives"]]
        if stored != idx.representatives:
            raise ValueError("stored representative order does not match canonical order")
        return idx


def build_index_set(cutoff: float) -> FlowIndexSet:
    return FlowIndexSet(cutoff)


@dataclass(frozen=True)
class DivFreeVelocityField:
    """Mean flow plus half-lattice mode amplitudes of an incompressible field."""

    mean_flow: tuple[float, float] = (0.0, 0.0)
    modes: Mapping[WaveVector, complex] = field(default_factory=dict)

    def evaluate(self, x: Iterable[float]) -> np.ndarray:
        """Physical velocity at a point (periodic in both coordinates)."""
        x = np.asarray(x, dtype=float)
        v = np.array(self.mean_flow, dtype=float)
        for k, vk in self.modes.items():
            phase = 2.0 * np.pi * (k[0] * x[0] + k[1] * x[1])
            a = 2.0 * vk.real
            b = -2.0 * vk.imag
            v = v + kperp_unit(k) * (a * np.cos(phase) + b * np.sin(phase))
        return v

    def __neg__(self) -> "DivFreeVelocityField":
        return DivFreeVelocityField(
            mean_flow=(-self.mean_flow[0], -self.mean_flow[1]),
            modes={k: -v for k, v in self.modes.items()},
        )

    def scaled(self, c: float) -> "DivFreeVelocityField":
        return DivFreeVelocityField(
            mean_flow=(c * self.mean_flow[0], c * self.mean_flow[1]),
            modes={k: c * v for k, v in self.modes.items()},
        )


class ScalarSpectralField:
    """Complex Fourier coefficients of a real scalar on {|k|_inf <= cutoff}.

    coeffs[kx + M, ky + M] stores the coefficient of exp(2 pi i k.x).
    """

    def __init__(self, cutoff: int, coeffs: np.ndarray | None = None):
        self.cutoff = int(cutoff)
        n = 2 * self.cutoff + 1
        if coeffs is None:
            coeffs = np.zeros((n, n), dtype=complex)
        coeffs = np.asarray(coeffs, dtype=complex)
        if coeffs.shape != (n, n):
            raise ValueError(f"coeffs must be {(n, n)}, got {coeffs.shape}")
        self.coeffs = coeffs

    @classmethod
    def from_modes(cls, cutoff: int, modes: Mapping[WaveVector, complex],
                   hermitian: bool = True) -> "ScalarSpectralField":
        """Build from a sparse mode map; with hermitian=True, missing -k
        entries are filled with conj to keep the physical field real."""
        f = cls(cutoff)
        M = f.cutoff
        for (kx, ky), c in modes.items():
            f.coeffs[kx + M, ky + M] = c
        if hermitian:
            for (kx, ky), c in modes.items():
                if (-kx, -ky) not in modes:
                    f.coeffs[-kx + M, -ky + M] = np.conj(c)
        return f

    def mode(self, k: WaveVector) -> complex:
        M = self.cutoff
        return self.coeffs[k[0] + M, k[1] + M]

    def evaluate(self, x: Iterable[float]) -> float:
        x = np.asarray(x, dtype=float)
        M = self.cutoff
        ks = np.arange(-M, M + 1)
        ex = np.exp(2j * np.pi * ks * x[0])
        ey = np.exp(2j * np.pi * ks * x[1])
        return float(np.real(ex @ self.coeffs @ ey))

    def reality_defect(self) -> float:
        """max_k |theta_k - conj(theta_{-k})|."""
        return float(np.max(np.abs(self.coeffs - np.conj(self.coeffs[::-1, ::-1]))))

    def to_grid(self, n: int) -> np.ndarray:
        """Physical values on an n-by-n uniform grid via zero-padded IFFT."""
        if n < 2 * self.cutoff + 1:
            raise ValueError("grid too coarse for the stored modes")
        M = self.cutoff
        big = np.zeros((n, n), dtype=complex)
        ks = np.arange(-M, M + 1)
        ix = np.mod(ks, n)
        big[np.ix_(ix, ix)] = self.coeffs
        return np.real(np.fft.ifft2(big)) * n * n

    def copy(self) -> "ScalarSpectralField":
        return ScalarSpectralField(self.cutoff, self.coeffs.copy())


def sobolev_norm(coeffs, s: float) -> float:
    """H^s seminorm sqrt(sum |k|^{2s} |c_k|^2) over nonzero modes.

    Accepts a ScalarSpectralField, or a pair (k_array, c_array) where c may
    be scalar or 2-vector coefficients per wave vector.
    """
    if isinstance(coeffs, ScalarSpectralField):
        M = coeffs.cutoff
        ks = np.arange(-M, M + 1)
        kx, ky = np.meshgrid(ks, ks, indexing="ij")
        norm2 = (kx.astype(float) ** 2 + ky ** 2)
        mask = norm2 > 0
        weights = norm2[mask] ** s
        return float(np.sqrt(np.sum(weights * np.abs(coeffs.coeffs[mask]) ** 2)))
    k_arr, c_arr = coeffs
    k_arr = np.asarray(k_arr, dtype=float)
    c_arr = np.asarray(c_arr)
    if len(k_arr) == 0:
        return 0.0
    norm2 = np.sum(k_arr ** 2, axis=1)
    mag2 = np.abs(c_arr) ** 2
    if mag2.ndim == 2:
        mag2 = mag2.sum(axis=1)
    mask = norm2 > 0
    return float(np.sqrt(np.sum(norm2[mask] ** s * mag2[mask])))


def shell_energy(field: DivFreeVelocityField, idx: FlowIndexSet, k: int) -> float:
    """(1/2) sum of |c_k'|^2 over the full lattice shell |k'|_2 = k."""
    total = 0.0
    for kk, vk in field.modes.items():
        if kk[0] ** 2 + kk[1] ** 2 == k * k:
            total += 2.0 * abs(vk) ** 2  # both +k and -k carry |v_k|^2
    return 0.5 * total


def vorticity(field: DivFreeVelocityField, idx: FlowIndexSet) -> ScalarSpectralField:
    """Spectral curl of the flow, omega_k = 2 pi i (kx c_{k,y} - ky c_{k,x})."""
    M = max(1, int(np.floor(idx.cutoff)))
    out = ScalarSpectralField(M)
    ks, cs = idx.full_coefficients(field)
    for (kx, ky), c in zip(ks, cs):
        out.coeffs[kx + M, ky + M] = 2j * np.pi * (kx * c[1] - ky * c[0])
    return out
