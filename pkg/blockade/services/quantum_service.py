"""Exact unitary dynamics of H = Ω Σ_k σ_k^x restricted to the blockade-allowed space."""
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.linalg import eigh, eigh_tridiagonal

from blockade.config import settings
from blockade.models.kinetics_models import ExcitationDistribution
from blockade.models.lattice_models import Configuration
from blockade.models.quantum_models import ModelParams, StateVector
from blockade.services.lattice_service import ConfigSpace, column_projection
from blockade.utils.exceptions import NormalizationError, PropagationError, ValidationError
from blockade.utils.logger import get_logger
from blockade.utils.validators import validate_dimension, validate_time_grid

logger = get_logger(__name__)

_BREAKDOWN = 1e-12


def _amplitudes(psi: Union[StateVector, np.ndarray]) -> np.ndarray:
    return psi.amplitudes if isinstance(psi, StateVector) else np.asarray(psi, dtype=np.complex128)


def _hamiltonian_matvec(space: ConfigSpace, omega: float):
    adjacency = space.adjacency

    def matvec(v: np.ndarray) -> np.ndarray:
        # real CSR applied to real and imaginary parts separately
        return omega * (adjacency @ v.real + 1j * (adjacency @ v.imag))

    return matvec


def basis_state(space: ConfigSpace, configuration: Union[Configuration, int, str]) -> StateVector:
    """Unit vector on one allowed configuration (bit string, occupation word or Configuration)."""
    if isinstance(configuration, str):
        configuration = Configuration.from_bits(configuration)
    occupation = configuration.occupation if isinstance(configuration, Configuration) else int(configuration)
    try:
        index = space.index_of(occupation)
    except KeyError as e:
        raise ValidationError(f"Configuration {occupation:#x} violates the blockade constraint") from e
    amplitudes = np.zeros(space.size, dtype=np.complex128)
    amplitudes[index] = 1.0
    return StateVector(amplitudes=amplitudes)


def random_column_state(space: ConfigSpace, n: int, seed: int) -> Tuple[StateVector, int]:
    """Basis state drawn uniformly from column n with numpy's PCG64 generator."""
    rng = np.random.default_rng(seed)
    column = space.column(n)
    index = int(rng.integers(column.start, column.stop))
    amplitudes = np.zeros(space.size, dtype=np.complex128)
    amplitudes[index] = 1.0
    return StateVector(amplitudes=amplitudes), int(space.occupations[index])


def apply_hamiltonian(space: ConfigSpace, params: ModelParams, psi: Union[StateVector, np.ndarray]) -> StateVector:
    """(Hψ)_i = Ω Σ_{j ∈ neighbors(i)} ψ_j."""
    amplitudes = _amplitudes(psi)
    validate_dimension(amplitudes, space.size, "state vector")
    omega_t = psi.omega_t if isinstance(psi, StateVector) else 0.0
    return StateVector(amplitudes=_hamiltonian_matvec(space, params.omega)(amplitudes), omega_t=omega_t)


def energy(space: ConfigSpace, params: ModelParams, psi: Union[StateVector, np.ndarray]) -> float:
    """Real part of ⟨ψ|H|ψ⟩."""
    amplitudes = _amplitudes(psi)
    validate_dimension(amplitudes, space.size, "state vector")
    return float(np.vdot(amplitudes, _hamiltonian_matvec(space, params.omega)(amplitudes)).real)


def _lanczos_exponentials(matvec, v: np.ndarray, durations: Sequence[float], krylov_dim: int) -> List[np.ndarray]:
    """exp(−iH·dt)v for each dt from one Lanczos basis (full reorthogonalization)."""
    beta0 = float(np.linalg.norm(v))
    if beta0 == 0.0:
        return [np.zeros_like(v) for _ in durations]
    m = min(krylov_dim, v.shape[0])
    basis = np.empty((m, v.shape[0]), dtype=np.complex128)
    alpha = np.zeros(m)
    beta = np.zeros(max(m - 1, 0))
    basis[0] = v / beta0
    k = m
    for j in range(m):
        w = matvec(basis[j])
        alpha[j] = np.vdot(basis[j], w).real
        w -= basis[: j + 1].T @ (basis[: j + 1].conj() @ w)
        if j == m - 1:
            break
        b = float(np.linalg.norm(w))
        if b < _BREAKDOWN:
            k = j + 1
            break
        beta[j] = b
        basis[j + 1] = w / b

    if k == 1:
        evals, evecs = alpha[:1], np.ones((1, 1))
    else:
        evals, evecs = eigh_tridiagonal(alpha[:k], beta[: k - 1])
    results = []
    for dt in durations:
        coeffs = evecs @ (np.exp(-1j * evals * dt) * evecs[0])
        results.append(beta0 * (coeffs @ basis[:k]))
    return results


class KrylovPropagator:
    """Short-time Lanczos stepping with step-halving error control.

    Each step of length h is taken once and as two halves from the same Lanczos
    basis; the difference is the error estimate, the two-half result is kept. The
    per-step budget is tolerance·h/horizon so the accumulated error over the
    requested time span stays below `tolerance`.
    """

    def __init__(
        self,
        space: ConfigSpace,
        params: ModelParams,
        tolerance: Optional[float] = None,
        krylov_dim: Optional[int] = None,
        max_steps: Optional[int] = None,
    ):
        self.space = space
        self.params = params
        self.tolerance = tolerance or settings.propagation_tolerance
        self.krylov_dim = krylov_dim or settings.krylov_dim
        self.max_steps = max_steps or settings.max_propagation_steps
        self._matvec = _hamiltonian_matvec(space, params.omega)
        self._step = settings.initial_step / params.omega
        self.steps_taken = 0

    def evolve(self, amplitudes: np.ndarray, duration: float, horizon: Optional[float] = None) -> np.ndarray:
        if duration == 0:
            return amplitudes.copy()
        direction = 1.0 if duration > 0 else -1.0
        remaining = abs(duration)
        horizon = max(horizon or remaining, remaining)
        psi = amplitudes
        min_step = remaining * 1e-12
        while remaining > 0:
            if self.steps_taken >= self.max_steps:
                logger.error("step_budget_exhausted", steps=self.steps_taken, remaining=remaining)
                raise PropagationError(
                    f"Tolerance {self.tolerance:g} not reached within {self.max_steps} steps "
                    f"({remaining:.3g} of {abs(duration):.3g} left)"
                )
            h = min(self._step, remaining)
            full, half = _lanczos_exponentials(self._matvec, psi, [direction * h, direction * h / 2], self.krylov_dim)
            (second,) = _lanczos_exponentials(self._matvec, half, [direction * h / 2], self.krylov_dim)
            error = float(np.linalg.norm(full - second))
            budget = self.tolerance * h / horizon
            if error > budget:
                self._step = h / 2
                if self._step < min_step:
                    raise PropagationError(f"Step size underflow at error {error:.3e} (budget {budget:.3e})")
                continue
            psi = second
            remaining = remaining - h if h < remaining else 0.0
            self.steps_taken += 1
            self._step = 2 * h if error < budget / 64 else h
        return psi

    def propagate(self, psi0: StateVector, omega_times: Sequence[float]) -> List[StateVector]:
        validate_dimension(psi0.amplitudes, self.space.size, "initial state")
        if abs(psi0.norm_squared - 1.0) > settings.norm_tolerance:
            raise NormalizationError(f"Initial state has squared norm {psi0.norm_squared!r}, expected 1")
        grid = validate_time_grid(omega_times)
        omega = self.params.omega
        horizon = float(grid[-1]) / omega if grid[-1] > 0 else 1.0 / omega
        current, psi = 0.0, psi0.amplitudes
        results = []
        for omega_t in grid:
            psi = self.evolve(psi, (float(omega_t) - current) / omega, horizon=horizon)
            current = float(omega_t)
            results.append(StateVector(amplitudes=psi, omega_t=current))
        logger.info(
            "propagated",
            states=self.space.size,
            samples=len(results),
            omega_t_max=float(grid[-1]),
            steps=self.steps_taken,
        )
        return results


def propagate(
    space: ConfigSpace,
    params: ModelParams,
    psi0: StateVector,
    omega_times: Sequence[float],
    tolerance: Optional[float] = None,
) -> List[StateVector]:
    """ψ(t) = exp(−iHt)ψ₀ at each requested Ωt (ascending, non-negative)."""
    return KrylovPropagator(space, params, tolerance=tolerance).propagate(psi0, omega_times)


def evolve(space: ConfigSpace, params: ModelParams, psi: StateVector, omega_duration: float) -> StateVector:
    """Propagate by a signed Ωt interval; negative intervals run the dynamics backwards."""
    validate_dimension(psi.amplitudes, space.size, "state vector")
    amplitudes = KrylovPropagator(space, params).evolve(psi.amplitudes, omega_duration / params.omega)
    return StateVector(amplitudes=amplitudes, omega_t=psi.omega_t + omega_duration)


def dense_propagate(
    space: ConfigSpace, params: ModelParams, psi0: StateVector, omega_times: Sequence[float]
) -> List[StateVector]:
    """Full eigendecomposition propagator; a reference for small spaces only."""
    if space.size > settings.dense_oracle_max_states:
        raise ValidationError(
            f"Dense propagation limited to {settings.dense_oracle_max_states} states, space has {space.size}"
        )
    energies, vectors = eigh(params.omega * space.adjacency.toarray())
    coefficients = vectors.T @ psi0.amplitudes
    return [
        StateVector(
            amplitudes=vectors @ (np.exp(-1j * energies * omega_t / params.omega) * coefficients),
            omega_t=float(omega_t),
        )
        for omega_t in validate_time_grid(omega_times, allow_negative=True)
    ]


def excitation_moments(space: ConfigSpace, psi: Union[StateVector, np.ndarray]) -> Tuple[float, float]:
    """(⟨N⟩, ⟨N²⟩) from the column projection."""
    distribution = column_projection(space, psi)
    return distribution.mean, distribution.second_moment


def excitation_fraction(space: ConfigSpace, psi: Union[StateVector, np.ndarray]) -> float:
    """⟨N⟩ / number of sites."""
    mean, _ = excitation_moments(space, psi)
    return mean / space.lattice.n_sites


def time_averaged_distribution(
    space: ConfigSpace,
    params: ModelParams,
    psi0: StateVector,
    window: Tuple[float, float],
    samples: int,
) -> ExcitationDistribution:
    """Arithmetic mean of p_n over `samples` uniformly spaced times in `window` (Ωt units)."""
    start, stop = window
    if not start < stop:
        raise ValidationError(f"Averaging window must satisfy start < stop, got {window}")
    if samples < 2:
        raise ValidationError("Time averaging needs at least two samples")
    states = propagate(space, params, psi0, np.linspace(start, stop, samples))
    p = np.mean([column_projection(space, state).p for state in states], axis=0)
    return ExcitationDistribution(p=p / p.sum(), omega_t=stop)
