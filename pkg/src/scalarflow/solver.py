"""Spectral Galerkin solver for advection-diffusion on the torus.

The scalar is truncated to the square mode lattice {|k|_inf <= cutoff} and
evolved by Crank-Nicolson.  The generator A encodes
d theta_l / dt = sum_m A_lm theta_m with

    A_lm = -2 pi i c_{k_l - k_m} . k_m  -  4 pi^2 kappa |k_l|^2 delta_lm,

where c_k' are the physical Fourier coefficients of the flow (including the
k_perp/|k'| factor) and the k' = 0 coefficient is the mean flow.  Advection
is skew-Hermitian thanks to incompressibility, so the CN step never
increases the L2 norm.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .fields import DivFreeVelocityField, FlowIndexSet, ScalarSpectralField

__all__ = [
    "SolverConfig",
    "SolverError",
    "ObservationSpec",
    "ObservationOperator",
    "ScalarTrajectory",
    "Generator",
    "StepOperator",
    "assemble_generator",
    "step_crank_nicolson",
    "solve_forward",
    "evaluate_point",
    "forward_map",
]

# below this mode count the CN step operator is formed as a dense
# propagator matrix (fast repeated solves for MCMC); above it the system
# is kept factored (dense LU, or sparse LU when the flow has few modes)
DENSE_PROPAGATOR_LIMIT = 1500
DENSE_LU_LIMIT = 6000


class SolverError(RuntimeError):
    """Raised when a linear solve inside the time stepper fails."""


@dataclass(frozen=True)
class SolverConfig:
    scalar_cutoff: int
    dt: float
    kappa: float
    t_final: float

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.kappa <= 0:
            raise ValueError("kappa must be positive")
        if self.t_final < self.dt:
            raise ValueError("dt must not exceed t_final")
        n_steps = self.t_final / self.dt
        if abs(n_steps - round(n_steps)) > 1e-8 * max(1.0, n_steps):
            raise ValueError("t_final must be an integer multiple of dt")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_final / self.dt))

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt

    def to_json_dict(self) -> dict:
        return {
            "cutoff": self.scalar_cutoff,
            "dt": self.dt,
            "t_final": self.t_final,
        }


def lattice(cutoff: int):
    """Flattened integer wave vectors of the square lattice |k|_inf <= cutoff.

    Index convention: flat = (kx + M) * (2M + 1) + (ky + M).
    """
    M = int(cutoff)
    ks = np.arange(-M, M + 1)
    kx, ky = np.meshgrid(ks, ks, indexing="ij")
    return kx.ravel(), ky.ravel()


def lattice_shift_indices(cutoff: int, shift: tuple[int, int]):
    """Source/destination flat indices for the band k -> k + shift.

    Returns (src, dst) such that dst[i] indexes k_src[i] + shift, both within
    the lattice.
    """
    M = int(cutoff)
    width = 2 * M + 1
    kx, ky = lattice(cutoff)
    sx, sy = shift
    valid = (kx + sx >= -M) & (kx + sx <= M) & (ky + sy >= -M) & (ky + sy <= M)
    src = np.nonzero(valid)[0]
    dst = src + sx * width + sy
    return src, dst


class Generator:
    """The spectral advection-diffusion generator over the square lattice."""

    def __init__(self, matrix, cutoff: int, kappa: float, field: DivFreeVelocityField):
        self.matrix = matrix
        self.cutoff = int(cutoff)
        self.kappa = kappa
        self.field = field
        self.n = (2 * self.cutoff + 1) ** 2
        self.is_sparse = sp.issparse(matrix)

    def apply(self, theta: np.ndarray) -> np.ndarray:
        return self.matrix @ theta


class AssemblyStructure:
    """Precomputed sparsity pattern of the advection bands for one
    (index set, lattice) pair, so repeated assemblies are vectorized fills.

    For the band of a representative k (and its negation), entry values are
    -2 pi i * v * (u . k_src) with v the mode amplitude (conjugated on the
    negative band).  The geometric dot products u . k_src are flow-independent
    and stored once.
    """

    def __init__(self, index_set: FlowIndexSet, cutoff: int):
        M = int(cutoff)
        self.cutoff = M
        self.n = (2 * M + 1) ** 2
        self.index_set = index_set
        kx, ky = lattice(M)
        flat, dots, reps, conj = [], [], [], []
        for j, (sx, sy) in enumerate(index_set.representatives):
            u = index_set.rep_unit[j]
            for sign in (1, -1):
                src, dst = lattice_shift_indices(M, (sign * sx, sign * sy))
                flat.append(dst * self.n + src)
                dots.append(u[0] * kx[src] + u[1] * ky[src])
                reps.append(np.full(len(src), j))
                conj.append(np.full(len(src), sign < 0))
        self.flat = np.concatenate(flat) if flat else np.zeros(0, dtype=int)
        self.dots = np.concatenate(dots) if dots else np.zeros(0)
        self.reps = np.concatenate(reps) if reps else np.zeros(0, dtype=int)
        self.conj = np.concatenate(conj) if conj else np.zeros(0, dtype=bool)
        self.diffusion = -4.0 * np.pi**2 * (kx.astype(float) ** 2 + ky**2)
        self.kx, self.ky = kx, ky

    def band_values(self, components: np.ndarray) -> np.ndarray:
        """Advection matrix entries for a flat component vector."""
        a = components[2::2]
        b = components[3::2]
        v = 0.5 * (a - 1j * b)
        amp = v[self.reps]
        amp = np.where(self.conj, np.conj(amp), amp)
        return -2j * np.pi * amp * self.dots

    def assemble(self, components: np.ndarray, kappa: float) -> "Generator":
        A = np.zeros((self.n, self.n), dtype=complex)
        A.flat[self.flat] = self.band_values(components)
        idx = np.arange(self.n)
        A[idx, idx] += kappa * self.diffusion
        mx, my = components[0], components[1]
        if mx != 0.0 or my != 0.0:
            A[idx, idx] += -2j * np.pi * (mx * self.kx + my * self.ky)
        field = self.index_set.from_components(components)
        return Generator(A, self.cutoff, kappa, field)


def assemble_generator(field: DivFreeVelocityField, cutoff: int, kappa: float,
                       index_set: FlowIndexSet | None = None,
                       force_sparse: bool | None = None) -> Generator:
    """Assemble A for the given flow on the scalar lattice |k|_inf <= cutoff.

    Flow modes whose advection cascade lands outside the lattice are
    truncated (Galerkin projection).  The matrix is dense for small systems
    and sparse CSR when the lattice is large but the flow has few modes.
    """
    M = int(cutoff)
    n = (2 * M + 1) ** 2
    width = 2 * M + 1
    kx, ky = lattice(M)
    if index_set is None:
        max_norm = max((np.hypot(k[0], k[1]) for k in field.modes), default=1.0)
        index_set = FlowIndexSet(max(1.0, float(max_norm)))
    ks, cs = index_set.full_coefficients(field)

    nnz_est = n * (len(ks) + 1)
    if force_sparse is None:
        use_sparse = n > 2500 and nnz_est < 0.05 * n * n
    else:
        use_sparse = force_sparse

    diag = -4.0 * np.pi**2 * kappa * (kx.astype(float) ** 2 + ky**2)
    mx, my = field.mean_flow
    if mx != 0.0 or my != 0.0:
        diag = diag.astype(complex) - 2j * np.pi * (mx * kx + my * ky)

    if use_sparse:
        rows = [np.arange(n)]
        cols = [np.arange(n)]
        vals = [diag.astype(complex)]
        for (sx, sy), c in zip(ks, cs):
            src, dst = lattice_shift_indices(M, (int(sx), int(sy)))
            rows.append(dst)
            cols.append(src)
            vals.append(-2j * np.pi * (c[0] * kx[src] + c[1] * ky[src]))
        A = sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(n, n),
        )
    else:
        A = np.zeros((n, n), dtype=complex)
        A[np.arange(n), np.arange(n)] = diag
        for (sx, sy), c in zip(ks, cs):
            src, dst = lattice_shift_indices(M, (int(sx), int(sy)))
            A[dst, src] += -2j * np.pi * (c[0] * kx[src] + c[1] * ky[src])
    return Generator(A, M, kappa, field)


class StepOperator:
    """Prefactored Crank-Nicolson step (I - dt/2 A) x' = (I + dt/2 A) x.

    Also exposes the transposed half-step operations used by the discrete
    adjoint: solve_m1_t (apply (I - dt/2 A)^{-T}) and apply_m2_t
    (apply (I + dt/2 A)^T).
    """

    def __init__(self, generator: Generator, dt: float):
        self.generator = generator
        self.dt = dt
        self.n = generator.n
        A = generator.matrix
        if generator.is_sparse:
            self.mode = "sparse"
            eye = sp.identity(self.n, dtype=complex, format="csc")
            self._m1 = (eye - (dt / 2.0) * A).tocsc()
            self._m2 = (eye + (dt / 2.0) * A).tocsr()
            self._m2_t = self._m2.T.tocsr()
            try:
                self._lu = spla.splu(self._m1)
            except RuntimeError as exc:  # pragma: no cover - singular M1
                raise SolverError(f"sparse CN factorization failed: {exc}") from exc
            self._b = None
        else:
            # M2 = 2I - M1, so the propagator is B = M1^{-1} M2 = 2 M1^{-1} - I
            # and neither M2 nor a matrix product is ever formed.
            m1 = np.eye(self.n, dtype=complex) - (dt / 2.0) * A
            self._m1 = m1
            lu = sla.lu_factor(m1, check_finite=False)
            if self.n <= DENSE_PROPAGATOR_LIMIT:
                self.mode = "dense-propagator"
                minv = sla.lu_solve(lu, np.eye(self.n, dtype=complex),
                                    check_finite=False)
                self._b = 2.0 * minv
                idx = np.arange(self.n)
                self._b[idx, idx] -= 1.0
                self._m1_inv_t = minv.T
                self._lu = None
            else:
                self.mode = "dense-lu"
                self._lu = lu
                self._b = None

    def step(self, theta: np.ndarray) -> np.ndarray:
        if self.mode == "dense-propagator":
            return self._b @ theta
        if self.mode == "dense-lu":
            rhs = 2.0 * theta - self._m1 @ theta  # M2 x = 2x - M1 x
            return sla.lu_solve(self._lu, rhs, check_finite=False)
        rhs = self._m2 @ theta
        return self._lu.solve(rhs)

    def solve_m1_t(self, x: np.ndarray) -> np.ndarray:
        if self.mode == "sparse":
            return self._lu.solve(x, trans="T")
        if self.mode == "dense-propagator":
            return self._m1_inv_t @ x
        return sla.lu_solve(self._lu, x, trans=1, check_finite=False)

    def apply_m2_t(self, x: np.ndarray) -> np.ndarray:
        if self.mode == "sparse":
            return self._m2_t @ x
        return 2.0 * x - self._m1.T @ x


def step_crank_nicolson(state: np.ndarray, generator: Generator, dt: float,
                        operator: StepOperator | None = None) -> np.ndarray:
    """Advance one CN step; prefer reusing a prefactored StepOperator."""
    if operator is None:
        operator = StepOperator(generator, dt)
    return operator.step(state)


class ScalarTrajectory:
    """Time-gridded spectral states of the scalar, flattened per state."""

    def __init__(self, times: np.ndarray, states: np.ndarray, cutoff: int):
        self.times = times
        self.states = states  # (n_times, n_modes) complex
        self.cutoff = int(cutoff)

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def t_final(self) -> float:
        return float(self.times[-1])

    def state_field(self, i: int) -> ScalarSpectralField:
        M = self.cutoff
        return ScalarSpectralField(M, self.states[i].reshape(2 * M + 1, 2 * M + 1))

    def mean_mode(self) -> np.ndarray:
        M = self.cutoff
        center = (2 * M + 1) * M + M
        return self.states[:, center]

    def interpolated_state(self, t: float) -> np.ndarray:
        i0, alpha = self._bracket(t)
        if alpha == 0.0:
            return self.states[i0]
        return (1.0 - alpha) * self.states[i0] + alpha * self.states[i0 + 1]

    def _bracket(self, t: float):
        if t < -1e-12 or t > self.t_final * (1 + 1e-12):
            raise ValueError(f"time {t} outside [0, {self.t_final}]")
        t = min(max(t, 0.0), self.t_final)
        pos = t / self.dt
        i0 = min(int(np.floor(pos)), len(self.times) - 2)
        if len(self.times) == 1:
            return 0, 0.0
        return i0, pos - i0

    def max_on_grid(self, n: int = 64) -> float:
        """Largest physical value over all stored times on an n x n grid."""
        best = -np.inf
        for i in range(len(self.times)):
            best = max(best, float(self.state_field(i).to_grid(n).max()))
        return best


def project_initial_condition(theta0: ScalarSpectralField, cutoff: int) -> np.ndarray:
    """Embed/truncate theta0 onto the solver lattice, flattened."""
    M = int(cutoff)
    out = ScalarSpectralField(M)
    M0 = theta0.cutoff
    lo = min(M, M0)
    out.coeffs[M - lo:M + lo + 1, M - lo:M + lo + 1] = \
        theta0.coeffs[M0 - lo:M0 + lo + 1, M0 - lo:M0 + lo + 1]
    return out.coeffs.ravel()


def solve_forward(field: DivFreeVelocityField, theta0: ScalarSpectralField,
                  config: SolverConfig,
                  index_set: FlowIndexSet | None = None,
                  operator: StepOperator | None = None) -> ScalarTrajectory:
    """Full CN trajectory of the scalar on the uniform time grid."""
    if operator is None:
        gen = assemble_generator(field, config.scalar_cutoff, config.kappa, index_set)
        operator = StepOperator(gen, config.dt)
    n_steps = config.n_steps
    states = np.empty((n_steps + 1, operator.n), dtype=complex)
    states[0] = project_initial_condition(theta0, config.scalar_cutoff)
    for i in range(n_steps):
        states[i + 1] = operator.step(states[i])
    if not np.all(np.isfinite(states[n_steps])):
        raise SolverError("non-finite state in forward solve")
    return ScalarTrajectory(config.times, states, config.scalar_cutoff)


@dataclass(frozen=True)
class ObservationSpec:
    """Ordered space-time measurement locations (t_j, x_j)."""

    times: np.ndarray
    points: np.ndarray  # (N, 2)

    def __post_init__(self):
        object.__setattr__(self, "times", np.atleast_1d(np.asarray(self.times, dtype=float)))
        object.__setattr__(self, "points", np.asarray(self.points, dtype=float).reshape(-1, 2))
        if len(self.times) != len(self.points):
            raise ValueError("times and points must have equal length")

    def __len__(self) -> int:
        return len(self.times)

    def to_json_list(self) -> list:
        return [
            {"t": float(t), "x": float(x), "y": float(y)}
            for t, (x, y) in zip(self.times, self.points)
        ]

    @classmethod
    def from_json_list(cls, rows: list) -> "ObservationSpec":
        return cls(
            times=np.array([r["t"] for r in rows], dtype=float),
            points=np.array([[r["x"], r["y"]] for r in rows], dtype=float),
        )


class ObservationOperator:
    """Precomputed point-observation rows and time-interpolation weights."""

    def __init__(self, spec: ObservationSpec, config: SolverConfig):
        if len(spec) and spec.times.max() > config.t_final * (1 + 1e-12):
            raise ValueError("observation time beyond t_final")
        if len(spec) and spec.times.min() < -1e-12:
            raise ValueError("negative observation time")
        self.spec = spec
        self.config = config
        M = config.scalar_cutoff
        kx, ky = lattice(M)
        if len(spec):
            # phi[j, k] = exp(2 pi i k . x_j)
            self.phi = np.exp(
                2j * np.pi * (np.outer(spec.points[:, 0], kx) + np.outer(spec.points[:, 1], ky))
            )
            pos = np.clip(spec.times, 0.0, config.t_final) / config.dt
            i0 = np.minimum(np.floor(pos).astype(int), config.n_steps - 1)
            self.i0 = i0
            self.alpha = pos - i0
        else:
            self.phi = np.zeros((0, (2 * M + 1) ** 2), dtype=complex)
            self.i0 = np.zeros(0, dtype=int)
            self.alpha = np.zeros(0)

    def apply(self, traj: ScalarTrajectory) -> np.ndarray:
        if len(self.spec) == 0:
            return np.zeros(0)
        interp = ((1.0 - self.alpha)[:, None] * traj.states[self.i0]
                  + self.alpha[:, None] * traj.states[self.i0 + 1])
        return np.real(np.einsum("jn,jn->j", interp, self.phi))


def evaluate_point(traj: ScalarTrajectory, t: float, x) -> float:
    """Point value theta(t, x): linear in time, spectral sum in space."""
    state = traj.interpolated_state(t)
    M = traj.cutoff
    kx, ky = lattice(M)
    phases = np.exp(2j * np.pi * (kx * x[0] + ky * x[1]))
    return float(np.real(state @ phases))


def forward_map(field: DivFreeVelocityField, theta0: ScalarSpectralField,
                spec: ObservationSpec, config: SolverConfig,
                index_set: FlowIndexSet | None = None,
                operator: StepOperator | None = None,
                obs_operator: ObservationOperator | None = None) -> np.ndarray:
    """G(v): solve the PDE and take every point observation, in spec order."""
    if len(spec) == 0:
        return np.zeros(0)
    if obs_operator is None:
        obs_operator = ObservationOperator(spec, config)
    traj = solve_forward(field, theta0, config, index_set=index_set, operator=operator)
    return obs_operator.apply(traj)
