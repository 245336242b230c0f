"""Hard-dimer combinatorics of the ring: counts, connectivities and the walk census.

All counting is exact (Python integers and `Fraction`); conversion to floats happens
only where the kinetics consume the coefficients.
"""
from fractions import Fraction
from math import comb, factorial, prod, sqrt
from typing import List

import numpy as np
import pandas as pd

from blockade.models.kinetics_models import DimerCounts, GeneratingPolys, TransitionCensus
from blockade.models.lattice_models import Lattice
from blockade.services.lattice_service import ConfigSpace, enumerate_configurations, lucas_number
from blockade.utils.exceptions import CombinatoricsError, ValidationError
from blockade.utils.logger import get_logger

logger = get_logger(__name__)

__all__ = [
    "lucas_number",
    "nu_closed_form",
    "c_down_closed_form",
    "forward_connectivity",
    "transition_coefficients",
    "graph_forward_connectivity",
    "generating_polys",
    "partition_function",
    "ring_density",
    "bulk_density",
    "transition_census",
    "coefficient_table",
]


def _check_range(length: int, n: int):
    if length < 2:
        raise CombinatoricsError(f"Ring length must be at least 2, got {length}")
    if not 0 <= n <= length // 2:
        raise CombinatoricsError(f"n={n} outside 0..{length // 2} for a ring of {length} sites")


def nu_closed_form(length: int, n: int) -> int:
    """ν_n = L/(L−n)·C(L−n, n): configurations of n hard dimers on a ring of L sites."""
    _check_range(length, n)
    if n == 0:
        return 1
    value = Fraction(length * comb(length - n, n), length - n)
    if value.denominator != 1:
        raise CombinatoricsError(f"ν_{n} for L={length} is not an integer: {value}")
    return int(value)


def c_down_closed_form(length: int, n: int) -> int:
    """c_{n→n−1} = L/(n−1)!·Π_{j=n+1}^{2n−1}(L−j), the number of removal links into column n−1."""
    _check_range(length, n)
    if n == 0:
        return 0
    value = Fraction(length * prod(length - j for j in range(n + 1, 2 * n)), factorial(n - 1))
    if value.denominator != 1 or value != n * nu_closed_form(length, n):
        raise CombinatoricsError(f"c_{{{n}→{n - 1}}} for L={length} disagrees with n·ν_n")
    return int(value)


def forward_connectivity(length: int, n: int) -> Fraction:
    """Mean number of forward links of a column-n state, (n+1)·ν_{n+1}/ν_n."""
    _check_range(length, n)
    if n == length // 2:
        return Fraction(0)
    return Fraction((n + 1) * nu_closed_form(length, n + 1), nu_closed_form(length, n))


def transition_coefficients(length: int) -> DimerCounts:
    """T_{n→n−1} = n and T_{n→n+1} = (L−2n−1)(L−2n)/(L−n−1), exact for n = 0 … ⌊L/2⌋."""
    if length < 3:
        raise ValidationError(f"Transition coefficients need L >= 3, got {length}")
    n_max = length // 2
    nu = [nu_closed_form(length, n) for n in range(n_max + 1)]
    c_down = [c_down_closed_form(length, n) for n in range(n_max + 1)]
    t_down = [Fraction(n) for n in range(n_max + 1)]
    t_up = [Fraction((length - 2 * n - 1) * (length - 2 * n), length - n - 1) for n in range(n_max + 1)]
    for n in range(n_max + 1):
        if t_up[n] != forward_connectivity(length, n):
            raise CombinatoricsError(f"T_up({n}) for L={length} differs from the mean forward connectivity")
        if c_down[n] != t_down[n] * nu[n]:
            raise CombinatoricsError(f"c_down({n}) for L={length} differs from T_down·ν")
    return DimerCounts(length=length, nu=nu, c_down=c_down, t_down=t_down, t_up=t_up)


def graph_forward_connectivity(space: ConfigSpace) -> List[Fraction]:
    """Exact mean forward degree per column, measured on the enumerated graph."""
    return [
        Fraction(space.edges_between(n), int(space.column_sizes[n])) if n < space.n_max else Fraction(0)
        for n in range(space.n_max + 1)
    ]


def generating_polys(length: int) -> GeneratingPolys:
    """Ξ(z) and Λ(z) coefficients from enumeration, verified against the closed forms."""
    if length < 2:
        raise ValidationError(f"Generating polynomials need L >= 2, got {length}")
    space = enumerate_configurations(Lattice.ring(length))
    xi = [int(v) for v in space.column_sizes]
    lam = [0] + [space.edges_between(n) for n in range(space.n_max)]

    expected_xi = [nu_closed_form(length, n) for n in range(length // 2 + 1)]
    expected_lam = [c_down_closed_form(length, n) for n in range(length // 2 + 1)]
    if xi != expected_xi or lam != expected_lam:
        logger.error("generating_polys_mismatch", length=length, xi=xi, expected_xi=expected_xi)
        raise CombinatoricsError(f"Enumerated Ξ/Λ for L={length} disagree with the closed forms")
    if sum(xi) != lucas_number(length):
        raise CombinatoricsError(f"Ξ(1) = {sum(xi)} differs from Lucas({length}) = {lucas_number(length)}")
    return GeneratingPolys(length=length, xi=xi, lam=lam)


def partition_function(length: int, z: float) -> float:
    """Ξ(z) = Σ_n ν_n zⁿ."""
    return float(sum(nu_closed_form(length, n) * z ** n for n in range(length // 2 + 1)))


def _transfer_eigenvalues(z: float):
    root = sqrt(1.0 + 4.0 * z)
    return (1.0 + root) / 2.0, (1.0 - root) / 2.0, root


def ring_density(length: int, z: float) -> float:
    """Exact mean occupation per site at fugacity z, from the two-state site transfer matrix.

    Ξ_L(z) = λ₊ᴸ + λ₋ᴸ with λ± = (1 ± √(1+4z))/2, and ρ = z·Ξ'/(L·Ξ).
    """
    if length < 2 or z <= 0:
        raise ValidationError(f"ring_density needs L >= 2 and z > 0, got L={length}, z={z}")
    lam_plus, lam_minus, root = _transfer_eigenvalues(z)
    ratio = lam_minus / lam_plus
    return float(z / (root * lam_plus) * (1.0 - ratio ** (length - 1)) / (1.0 + ratio ** length))


def bulk_density(z: float) -> float:
    """Thermodynamic-limit density ½(1 − 1/√(1+4z))."""
    if z <= 0:
        raise ValidationError(f"Fugacity must be positive, got {z}")
    return 0.5 * (1.0 - 1.0 / sqrt(1.0 + 4.0 * z))


def transition_census(space: ConfigSpace, n: int) -> TransitionCensus:
    """Classify every ordered length-2 walk i → k → j with i in column n.

    j = i is a loop, j ≠ i in column n a reflection, |Δn| = 2 a transmission.
    """
    try:
        rows = space.column(n)
    except IndexError as e:
        raise CombinatoricsError(str(e)) from e
    column_size = rows.stop - rows.start
    if column_size == 0:
        raise CombinatoricsError(f"Column {n} of {space.lattice.label} is empty")

    adjacency = space.adjacency
    walks = (adjacency[rows] @ adjacency).tocoo()
    sources = walks.row + rows.start
    counts = np.rint(walks.data).astype(np.int64)
    shift = space.excitations[walks.col] - n

    is_loop = walks.col == sources
    is_reflection = (shift == 0) & ~is_loop
    loops = int(counts[is_loop].sum())
    reflections = int(counts[is_reflection].sum())
    transmissions = int(counts[np.abs(shift) == 2].sum())

    expected_total = int(np.rint((adjacency[rows] @ space.degrees.astype(float)).sum()))
    if loops + reflections + transmissions != expected_total:
        raise CombinatoricsError(
            f"Walk census for column {n} counts {loops + reflections + transmissions}, expected {expected_total}"
        )
    if loops != int(space.degrees[rows].sum()):
        raise CombinatoricsError(f"Loop count for column {n} differs from the summed degrees")

    census = TransitionCensus(
        length=space.lattice.n_sites,
        n=n,
        column_size=column_size,
        loops=loops,
        reflections=reflections,
        transmissions=transmissions,
        reflection_partners=float(np.count_nonzero(is_reflection)) / column_size,
    )
    logger.info(
        "census_complete",
        lattice=space.lattice.label,
        n=n,
        loops=loops,
        reflections=reflections,
        transmissions=transmissions,
    )
    return census


def coefficient_table(length: int) -> pd.DataFrame:
    """Rows `L, n, nu_n, c_down, T_down, T_up` for a ring of `length` sites."""
    counts = transition_coefficients(length)
    return pd.DataFrame(
        {
            "L": length,
            "n": range(counts.n_max + 1),
            "nu_n": counts.nu,
            "c_down": counts.c_down,
            "T_down": [float(v) for v in counts.t_down],
            "T_up": [float(v) for v in counts.t_up],
        }
    )
