"""Excitation-number Master equation ∂_t p = 2Ω²t·W p.

With τ = (Ωt)² the equation becomes autonomous, dp/dτ = W p, so every solution is
p(t) = exp(W·(Ωt)²)·p₀. Times are handled as Ωt throughout.
"""
from fractions import Fraction
from math import sqrt
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm
from scipy.stats import linregress

from blockade.models.kinetics_models import (
    DimerCounts,
    EquilibriumDistribution,
    ExcitationDistribution,
    RateMatrix,
    RelaxationFit,
)
from blockade.models.lattice_models import LatticeKind
from blockade.services.dimer_service import lucas_number, transition_coefficients
from blockade.services.lattice_service import ConfigSpace
from blockade.utils.distances import total_variation
from blockade.utils.exceptions import (
    MasterEquationError,
    RateTableError,
    RelaxationFitError,
    ValidationError,
)
from blockade.utils.logger import get_logger
from blockade.utils.validators import validate_distribution, validate_time_grid

logger = get_logger(__name__)

GOLDEN_FACTOR = 2.0 / (1.0 + sqrt(5.0))


def build_rates_1d(length: int, counts: Optional[DimerCounts] = None) -> RateMatrix:
    """Tridiagonal generator of the ring from the closed-form transition coefficients."""
    counts = counts or transition_coefficients(length)
    rates = RateMatrix(
        t_down=[float(v) for v in counts.t_down],
        t_up=[float(v) for v in counts.t_up],
        source=f"closed-form:ring-{length}",
    )
    logger.info("rates_built", source=rates.source, n_max=rates.n_max)
    return rates


def build_rates_from_space(space: ConfigSpace) -> RateMatrix:
    """Census rates: mean number of links from a column-n state to columns n±1."""
    sizes = space.column_sizes
    if np.any(sizes == 0):
        raise RateTableError(f"{space.lattice.label} has empty columns: {sizes.tolist()}")
    between = np.array([space.edges_between(n) for n in range(space.n_max)], dtype=float)
    t_up = np.append(between / sizes[:-1], 0.0)
    t_down = np.concatenate([[0.0], between / sizes[1:]])
    return RateMatrix(t_down=t_down, t_up=t_up, source=f"census:{space.lattice.label}")


def build_rates_2d(space: ConfigSpace) -> RateMatrix:
    """Census rates of a torus; every excitation must be removable, T_{n→n−1} = n exactly."""
    if space.lattice.kind != LatticeKind.TORUS:
        raise ValidationError(f"build_rates_2d needs a torus, got {space.lattice.label}")
    for n in range(1, space.n_max + 1):
        links, expected = space.edges_between(n - 1), n * int(space.column_sizes[n])
        if links != expected:
            logger.error("removal_count_mismatch", lattice=space.lattice.label, n=n, links=links, expected=expected)
            raise RateTableError(f"Column {n} of {space.lattice.label}: {links} removal links, expected {expected}")
    rates = build_rates_from_space(space)
    logger.info("rates_built", source=rates.source, n_max=rates.n_max)
    return rates


def _checked_initial(p0: ExcitationDistribution, rates: RateMatrix) -> np.ndarray:
    """Validate p0 against the rate table size and normalization."""
    if p0.p.size != rates.n_max + 1:
        raise ValidationError(f"Initial distribution has {p0.p.size} entries, generator has {rates.n_max + 1}")
    validate_distribution(p0.p, tolerance=1e-10, what="initial distribution")
    return np.array(p0.p)


def _checked_times(omega_times: Sequence[float]) -> np.ndarray:
    try:
        return validate_time_grid(omega_times)
    except ValidationError as e:
        raise MasterEquationError(str(e)) from e


def solve_master(
    rates: RateMatrix, p0: ExcitationDistribution, omega_times: Sequence[float]
) -> List[ExcitationDistribution]:
    """p at each Ωt via the τ-substitution, p(τ) = exp(W·τ)·p₀ with τ = (Ωt)²."""
    p = _checked_initial(p0, rates)
    grid = _checked_times(omega_times)
    generator = rates.generator()
    results, drift = [], 0.0
    for omega_t in grid:
        tau = float(omega_t) ** 2
        current = p.copy() if tau == 0 else expm(generator * tau) @ p
        drift = max(drift, abs(current.sum() - 1.0))
        results.append(ExcitationDistribution(p=current, omega_t=float(omega_t)))
    logger.info("master_solved", source=rates.source, samples=len(results), max_norm_drift=drift)
    return results


def integrate_master_direct(
    rates: RateMatrix,
    p0: ExcitationDistribution,
    omega_times: Sequence[float],
    rtol: float = 1e-11,
    atol: float = 1e-13,
) -> List[ExcitationDistribution]:
    """Adaptive integration of the non-autonomous form dp/d(Ωt) = 2·(Ωt)·W p."""
    p = _checked_initial(p0, rates)
    grid = _checked_times(omega_times)
    generator = rates.generator()
    if grid[-1] == 0:
        return [ExcitationDistribution(p=p, omega_t=0.0) for _ in grid]
    solution = solve_ivp(
        lambda s, y: 2.0 * s * (generator @ y),
        (0.0, float(grid[-1])),
        p,
        method="DOP853",
        t_eval=grid,
        rtol=rtol,
        atol=atol,
    )
    if not solution.success:
        raise MasterEquationError(f"Direct integration failed: {solution.message}")
    return [
        ExcitationDistribution(p=solution.y[:, k], omega_t=float(omega_t))
        for k, omega_t in enumerate(grid)
    ]


def equilibrium_closed_form(length: int) -> EquilibriumDistribution:
    """p_n^eq = (2/(1+√5))^L · ν_n, with its raw sum and an exactly renormalized copy."""
    if length < 3:
        raise ValidationError(f"Closed-form equilibrium needs L >= 3, got {length}")
    counts = transition_coefficients(length)
    raw = GOLDEN_FACTOR ** length * np.array([float(v) for v in counts.nu])
    total = lucas_number(length)
    normalized = np.array([float(Fraction(v, total)) for v in counts.nu])
    return EquilibriumDistribution(
        length=length,
        raw=raw,
        raw_sum=float(raw.sum()),
        normalized=ExcitationDistribution(p=normalized),
    )


def detailed_balance_residuals(
    length: int, counts: Optional[DimerCounts] = None
) -> Tuple[List[Fraction], np.ndarray]:
    """Residuals p_n T_{n→n+1} − p_{n+1} T_{n+1→n}: exact (rational) and relative (float).

    The golden-ratio prefactor is common to every term, so the exact check uses ν_n.
    """
    counts = counts or transition_coefficients(length)
    nu = counts.nu
    exact = [nu[n] * counts.t_up[n] - nu[n + 1] * counts.t_down[n + 1] for n in range(counts.n_max)]
    raw = GOLDEN_FACTOR ** length * np.array([float(v) for v in nu])
    forward = raw[:-1] * np.array([float(v) for v in counts.t_up[:-1]])
    backward = raw[1:] * np.array([float(v) for v in counts.t_down[1:]])
    scale = np.maximum(np.maximum(np.abs(forward), np.abs(backward)), np.finfo(float).tiny)
    return exact, np.abs(forward - backward) / scale


def relaxation_observable(
    trajectory: Sequence[ExcitationDistribution],
    kind: str,
    equilibrium: ExcitationDistribution,
) -> np.ndarray:
    """Deviation from equilibrium along a trajectory: |Δ mean|, |Δ variance| or TV."""
    if kind == "mean":
        return np.array([abs(d.mean - equilibrium.mean) for d in trajectory])
    if kind == "variance":
        return np.array([abs(d.variance - equilibrium.variance) for d in trajectory])
    if kind == "tv":
        return np.array([total_variation(d.p, equilibrium.p) for d in trajectory])
    raise ValidationError(f"Unknown relaxation observable {kind!r}; use mean, variance or tv")


def gaussian_relaxation_fit(
    omega_times: Sequence[float],
    deviation: Sequence[float],
    window: Optional[Tuple[float, float]] = None,
    floor: float = 1e-12,
) -> RelaxationFit:
    """Least-squares fit of log(deviation) = c − λ·(Ωt)²."""
    omega_times = np.asarray(omega_times, dtype=float)
    deviation = np.asarray(deviation, dtype=float)
    if omega_times.shape != deviation.shape:
        raise ValidationError("Times and deviations must have the same length")
    mask = deviation > floor
    if window is not None:
        mask &= (omega_times >= window[0]) & (omega_times <= window[1])
    if np.count_nonzero(mask) < 3:
        raise RelaxationFitError("Trajectory is already at equilibrium; fewer than three points above the floor")

    tau = omega_times[mask] ** 2
    log_dev = np.log(deviation[mask])
    if np.ptp(tau) == 0:
        raise RelaxationFitError("Fit window contains a single time")
    fit = linregress(tau, log_dev)
    lam = -float(fit.slope)
    if lam <= 0:
        raise RelaxationFitError(f"Deviation does not decay (fitted λ = {lam:.4g})")
    residual = log_dev - (fit.intercept + fit.slope * tau)
    result = RelaxationFit(
        lam=lam,
        intercept=float(fit.intercept),
        r_squared=float(fit.rvalue ** 2),
        residual_rms=float(np.sqrt(np.mean(residual ** 2))),
        points=int(tau.size),
    )
    logger.info("relaxation_fitted", lam=result.lam, r_squared=result.r_squared, points=result.points)
    return result
