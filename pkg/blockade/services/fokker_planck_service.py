"""Continuum limit of the ring Master equation on x = n/L ∈ [0, ½].

∂_τ p = −∂_x[F p − ½ ∂_x(D p)] with τ = (Ωt)², F(x) = (1 − 5x + 5x²)/(1 − x) and
D(x) = (1 − 3x + 3x²)/[(1 − x)·L]. The flux is written as J = v p − d ∂_x p with
v = F − ½D' and d = ½D, and discretized with Scharfetter–Gummel face fluxes on a
cell-centred grid; both boundaries are no-flux.
"""
from math import ceil, sqrt
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.sparse as sp
from scipy.integrate import quad
from scipy.optimize import brentq
from scipy.sparse.linalg import expm_multiply

from blockade.config import settings
from blockade.models.fpe_models import (
    ConsistencyReport,
    FpeField,
    FpeSnapshot,
    JacobianConvention,
    QuadraticFit,
    TransformedField,
)
from blockade.models.kinetics_models import ExcitationDistribution
from blockade.services.master_service import build_rates_1d, solve_master
from blockade.utils.distances import total_variation
from blockade.utils.exceptions import FokkerPlanckError, ValidationError
from blockade.utils.logger import get_logger
from blockade.utils.validators import validate_time_grid

logger = get_logger(__name__)

X_MAX = 0.5
FIXED_POINT = (5.0 - sqrt(5.0)) / 10.0


def drift(x):
    x = np.asarray(x, dtype=float)
    return (1.0 - 5.0 * x + 5.0 * x ** 2) / (1.0 - x)


def diffusion(x, length: int):
    x = np.asarray(x, dtype=float)
    return (1.0 - 3.0 * x + 3.0 * x ** 2) / ((1.0 - x) * length)


def diffusion_slope(x, length: int):
    """dD/dx."""
    x = np.asarray(x, dtype=float)
    return (-2.0 + 6.0 * x - 3.0 * x ** 2) / ((1.0 - x) ** 2 * length)


def cell_grid(cells: Optional[int] = None) -> np.ndarray:
    """Cell centres of a uniform partition of [0, ½]."""
    cells = cells or settings.fpe_cells
    if cells < 2:
        raise ValidationError(f"Need at least two cells, got {cells}")
    h = X_MAX / cells
    return (np.arange(cells) + 0.5) * h


def fields(length: int, grid: Sequence[float]) -> FpeField:
    """Pointwise F(x) and D(x) on `grid` ⊂ [0, ½]."""
    if length < 3:
        raise ValidationError(f"Fokker-Planck fields need L >= 3, got {length}")
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0 or grid.min() < 0 or grid.max() > X_MAX:
        raise ValidationError("Grid must be a non-empty vector inside [0, 0.5]")
    return FpeField(length=length, grid=grid, drift=drift(grid), diffusion=diffusion(grid, length))


def bernoulli(z):
    """B(z) = z/(eᶻ − 1), with B(0) = 1."""
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < 1e-8
    safe = np.where(small, 1.0, z)
    return np.where(small, 1.0 - z / 2.0, safe / np.expm1(safe))


class FokkerPlanckSolver:
    """Finite-volume generator G with dp/dτ = G p for the cell densities."""

    def __init__(self, field: FpeField):
        grid = field.grid
        cells = grid.size
        h = X_MAX / cells
        if cells < 2 or not np.allclose(grid, (np.arange(cells) + 0.5) * h, rtol=0, atol=1e-12):
            raise FokkerPlanckError("Solver needs the uniform cell-centred grid produced by cell_grid()")
        self.field = field
        self.h = h
        faces = np.arange(1, cells) * h
        d_cells = 0.5 * field.diffusion
        # harmonic mean of the neighbouring cell diffusivities
        self.face_diffusion = 2.0 * d_cells[:-1] * d_cells[1:] / (d_cells[:-1] + d_cells[1:])
        self.face_velocity = drift(faces) - 0.5 * diffusion_slope(faces, field.length)
        self.peclet = self.face_velocity * h / self.face_diffusion
        self.generator = self._assemble()

    def _assemble(self) -> sp.csr_matrix:
        # J_{i+½} = (d/h)[B(−Pe) p_i − B(Pe) p_{i+1}]
        cells = self.field.grid.size
        scale = self.face_diffusion / self.h ** 2
        out_right = scale * bernoulli(-self.peclet)
        in_from_right = scale * bernoulli(self.peclet)
        diagonal = np.zeros(cells)
        diagonal[:-1] -= out_right
        diagonal[1:] -= in_from_right
        return sp.diags(
            [in_from_right, diagonal, out_right],
            offsets=[1, 0, -1],
            shape=(cells, cells),
            format="csr",
        )

    def stationary(self) -> np.ndarray:
        """Discrete zero-flux density, p_{i+1} = p_i·e^{Pe}, normalized by Σ p h."""
        log_p = np.concatenate([[0.0], np.cumsum(self.peclet)])
        p = np.exp(log_p - log_p.max())
        return p / (p.sum() * self.h)

    def solve(self, p0: Sequence[float], omega_times: Sequence[float]) -> List[FpeSnapshot]:
        p = np.asarray(p0, dtype=float)
        if p.shape != self.field.grid.shape:
            raise ValidationError(f"Initial density has shape {p.shape}, grid has {self.field.grid.shape}")
        if np.any(p < 0):
            raise ValidationError("Initial density must be non-negative")
        mass0 = float(p.sum() * self.h)
        if abs(mass0 - 1.0) > settings.fpe_mass_tolerance:
            raise ValidationError(f"Initial density integrates to {mass0!r}, expected 1")
        grid = validate_time_grid(omega_times)

        snapshots, tau_prev, max_drift = [], 0.0, 0.0
        for omega_t in grid:
            tau = float(omega_t) ** 2
            if tau > tau_prev:
                p = expm_multiply(self.generator * (tau - tau_prev), p)
                tau_prev = tau
            mass = float(p.sum() * self.h)
            max_drift = max(max_drift, abs(mass - 1.0))
            if not np.all(np.isfinite(p)) or abs(mass - 1.0) > settings.fpe_mass_tolerance:
                logger.error("fpe_step_failed", omega_t=float(omega_t), mass=mass, min_density=float(np.min(p)))
                raise FokkerPlanckError(
                    f"Fokker-Planck step to Ωt={omega_t:g} failed: mass {mass!r}, "
                    f"min density {np.min(p):.3e}, max |Pe| {np.abs(self.peclet).max():.3g}"
                )
            snapshots.append(FpeSnapshot(omega_t=float(omega_t), grid=self.field.grid, density=p))
        logger.info(
            "fpe_solved",
            length=self.field.length,
            cells=self.field.grid.size,
            samples=len(snapshots),
            max_mass_drift=max_drift,
        )
        return snapshots


def solve_fpe(field: FpeField, p0: Sequence[float], omega_times: Sequence[float]) -> List[FpeSnapshot]:
    """Densities at each Ωt from the initial cell density p0."""
    return FokkerPlanckSolver(field).solve(p0, omega_times)


def stationary_density(field: FpeField) -> FpeSnapshot:
    """Zero-flux stationary density of the discretized equation (stamped Ωt = ∞)."""
    solver = FokkerPlanckSolver(field)
    return FpeSnapshot(omega_t=float("inf"), grid=field.grid, density=solver.stationary())


def flux_residual(field: FpeField, density: Sequence[float]) -> float:
    """max |F p − ½ ∂_x(D p)| relative to max |F p|, with centred differences."""
    density = np.asarray(density, dtype=float)
    flux = field.drift * density - 0.5 * np.gradient(field.diffusion * density, field.grid)
    return float(np.abs(flux).max() / np.abs(field.drift * density).max())


def gaussian_density(grid: Sequence[float], center: float, width: float) -> np.ndarray:
    """Gaussian bump on the grid, normalized by the midpoint rule."""
    grid = np.asarray(grid, dtype=float)
    p = np.exp(-0.5 * ((grid - center) / width) ** 2)
    return p / (p.sum() * (grid[1] - grid[0]))


def column_density(grid: Sequence[float], n: int, length: int) -> np.ndarray:
    """Uniform density on the bin [(n−½)/L, (n+½)/L] ∩ [0, ½] of excitation number n."""
    grid = np.asarray(grid, dtype=float)
    h = grid[1] - grid[0]
    faces = np.concatenate([grid - h / 2, [grid[-1] + h / 2]])
    low, high = max((n - 0.5) / length, 0.0), min((n + 0.5) / length, X_MAX)
    overlap = np.clip(np.minimum(faces[1:], high) - np.maximum(faces[:-1], low), 0.0, None)
    if overlap.sum() == 0:
        raise ValidationError(f"Column {n} of L={length} does not intersect the grid")
    return overlap / (overlap.sum() * h)


def bin_to_columns(snapshot: FpeSnapshot, length: int) -> ExcitationDistribution:
    """Integrate the piecewise-constant density over each excitation-number bin."""
    h = snapshot.spacing
    faces = np.concatenate([snapshot.grid - h / 2, [snapshot.grid[-1] + h / 2]])
    cdf = np.concatenate([[0.0], np.cumsum(snapshot.density * h)])
    n_max = length // 2
    edges = np.clip((np.arange(n_max + 2) - 0.5) / length, 0.0, X_MAX)
    edges[-1] = X_MAX
    p = np.diff(np.interp(edges, faces, cdf))
    return ExcitationDistribution(p=p, omega_t=snapshot.omega_t)


def jacobian(x, length: int, convention: Union[JacobianConvention, str] = JacobianConvention.SCALED):
    """dy/dx: [2·L·D(x)]^(−1/2) (scaled) or D(x)^(−1/2) (literal)."""
    convention = JacobianConvention(convention)
    if convention == JacobianConvention.SCALED:
        return 1.0 / np.sqrt(2.0 * length * diffusion(x, length))
    return 1.0 / np.sqrt(diffusion(x, length))


def _y_of_x(length: int, convention: JacobianConvention) -> Callable[[float], float]:
    tol = settings.quadrature_tolerance

    def y_of_x(x: float) -> float:
        value, _ = quad(lambda s: float(jacobian(s, length, convention)), 0.0, x, epsabs=tol, epsrel=tol)
        return value

    return y_of_x


def transform(
    field: FpeField, convention: Union[JacobianConvention, str, None] = None
) -> TransformedField:
    """Constant-diffusion coordinate y(x) = ∫₀ˣ J, force F̃ = J[F − ½ ∂_y(D J)] and U = −∫ F̃ dy."""
    convention = JacobianConvention(convention or settings.jacobian_convention)
    length = field.length
    tol = settings.quadrature_tolerance
    x = np.unique(np.concatenate([[0.0], field.grid, [X_MAX]]))

    def jac(s):
        return float(jacobian(s, length, convention))

    def force(s):
        j = jac(s)
        d_slope = float(diffusion_slope(s, length))
        # J ∝ D^(−1/2), so dJ/dx = −½ J D'/D
        j_slope = -0.5 * j * d_slope / float(diffusion(s, length))
        return j * float(drift(s)) - 0.5 * (d_slope * j + float(diffusion(s, length)) * j_slope)

    y = np.zeros_like(x)
    potential = np.zeros_like(x)
    for k in range(1, x.size):
        a, b = x[k - 1], x[k]
        y[k] = y[k - 1] + quad(jac, a, b, epsabs=tol, epsrel=tol)[0]
        potential[k] = potential[k - 1] - quad(lambda s: force(s) * jac(s), a, b, epsabs=tol, epsrel=tol)[0]

    transformed = TransformedField(
        length=length,
        convention=convention,
        x=x,
        y=y,
        jacobian=jacobian(x, length, convention),
        force=np.array([force(s) for s in x]),
        potential=potential,
    )
    logger.info(
        "transform_computed",
        length=length,
        convention=convention.value,
        y_max=float(y[-1]),
        potential_minimum_x=transformed.potential_minimum_x,
    )
    return transformed


def inverse_transform(transformed: TransformedField, y_values: Union[float, Sequence[float]]) -> np.ndarray:
    """x(y) by root finding on the quadrature y(x)."""
    y_of_x = _y_of_x(transformed.length, transformed.convention)
    y_max = float(transformed.y[-1])
    y_top = y_of_x(X_MAX)
    targets = np.atleast_1d(np.asarray(y_values, dtype=float))
    xs = []
    for target in targets:
        if target < 0 or target > y_max + 1e-12:
            raise FokkerPlanckError(f"y = {target} outside the transformed range [0, {y_max}]")
        target = min(float(target), y_max)
        if target == 0:
            xs.append(0.0)
            continue
        if target >= y_top:
            xs.append(X_MAX)
            continue
        xs.append(brentq(lambda s: y_of_x(s) - target, 0.0, X_MAX, xtol=1e-14, rtol=1e-14))
    return np.array(xs)


def fit_quadratic_transform(transformed: TransformedField) -> QuadraticFit:
    """Least squares y(x) ≈ a1·x + a2·x²."""
    design = np.column_stack([transformed.x, transformed.x ** 2])
    (a1, a2), *_ = np.linalg.lstsq(design, transformed.y, rcond=None)
    residual = transformed.y - design @ np.array([a1, a2])
    return QuadraticFit(
        a1=float(a1),
        a2=float(a2),
        relative_residual=float(np.linalg.norm(residual) / np.linalg.norm(transformed.y)),
    )


def quadratic_inverse(a1: float, a2: float, y):
    """Positive root of a2·x² + a1·x − y = 0."""
    y = np.asarray(y, dtype=float)
    if a2 == 0:
        return y / a1
    return (-a1 + np.sqrt(a1 ** 2 + 4.0 * a2 * y)) / (2.0 * a2)


def to_y_representation(snapshot: FpeSnapshot, transformed: TransformedField) -> Tuple[np.ndarray, np.ndarray]:
    """(y, π(y)) with π(y) = p(x)/J(x), so that π dy = p dx."""
    y = np.interp(snapshot.grid, transformed.x, transformed.y)
    j = jacobian(snapshot.grid, transformed.length, transformed.convention)
    return y, snapshot.density / j


def consistency_cells(length: int) -> int:
    """Smallest multiple of 2L reaching settings.fpe_cells, so bin edges fall on cell faces."""
    return 2 * length * max(1, ceil(settings.fpe_cells / (2 * length)))


def discrete_continuum_consistency(
    length: int,
    omega_times: Sequence[float],
    n0: Optional[int] = None,
    cells: Optional[int] = None,
) -> ConsistencyReport:
    """Master equation (x = n/L) against the FPE started from the matching bin density."""
    if length < 50:
        logger.warning("continuum_limit_small_length", length=length)
    n0 = int(round(0.275 * length)) if n0 is None else n0
    if not 0 <= n0 <= length // 2:
        raise ValidationError(f"n0={n0} outside 0..{length // 2}")
    grid_times = validate_time_grid(omega_times)

    rates = build_rates_1d(length)
    p0 = np.zeros(rates.n_max + 1)
    p0[n0] = 1.0
    master = solve_master(rates, ExcitationDistribution(p=p0), grid_times)

    field = fields(length, cell_grid(cells or consistency_cells(length)))
    solver = FokkerPlanckSolver(field)
    snapshots = solver.solve(column_density(field.grid, n0, length), grid_times)
    binned = [bin_to_columns(snapshot, length) for snapshot in snapshots]

    tv = [total_variation(a.p, b.p) for a, b in zip(master, binned)]
    stationary = FpeSnapshot(omega_t=float("inf"), grid=field.grid, density=solver.stationary())
    master_stationary = ExcitationDistribution(p=rates.stationary())
    report = ConsistencyReport(
        length=length,
        n0=n0,
        omega_t=[float(t) for t in grid_times],
        tv=tv,
        max_tv=max(tv),
        final_tv=tv[-1],
        master_mean_x=master[-1].mean / length,
        fpe_mean_x=snapshots[-1].mean,
        master_stationary_mean_x=master_stationary.mean / length,
        fpe_stationary_mean_x=stationary.mean,
    )
    logger.info("consistency_checked", length=length, n0=n0, max_tv=report.max_tv, final_tv=report.final_tv)
    return report
