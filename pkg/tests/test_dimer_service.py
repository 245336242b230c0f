from fractions import Fraction

import numpy as np
import pytest

from blockade.models.lattice_models import Lattice
from blockade.services.dimer_service import (
    bulk_density,
    c_down_closed_form,
    coefficient_table,
    forward_connectivity,
    generating_polys,
    graph_forward_connectivity,
    lucas_number,
    nu_closed_form,
    partition_function,
    ring_density,
    transition_census,
    transition_coefficients,
)
from blockade.services.lattice_service import enumerate_configurations
from blockade.utils.exceptions import CombinatoricsError, ValidationError

RING_25_NU = [1, 25, 275, 1750, 7125, 19380, 35700, 44200, 35750, 17875, 5005, 650, 25]


def test_dimer_counts_ring_25():
    assert [nu_closed_form(25, n) for n in range(13)] == RING_25_NU
    assert sum(RING_25_NU) == lucas_number(25) == 167761


@pytest.mark.parametrize("length", range(3, 16))
def test_closed_forms_match_enumeration(length):
    space = enumerate_configurations(Lattice.ring(length))
    assert space.column_sizes.tolist() == [nu_closed_form(length, n) for n in range(length // 2 + 1)]
    counts = transition_coefficients(length)
    assert graph_forward_connectivity(space) == counts.t_up


def test_removal_links():
    assert [c_down_closed_form(8, n) for n in range(5)] == [0, 8, 40, 48, 8]


def test_transition_coefficients_ring_8():
    counts = transition_coefficients(8)
    assert counts.t_down == [Fraction(n) for n in range(5)]
    assert counts.t_up[0] == 8
    assert counts.t_up[1] == 5
    assert counts.t_up[-1] == 0
    assert forward_connectivity(8, 2) == Fraction(12, 5)


def test_out_of_range():
    with pytest.raises(CombinatoricsError):
        nu_closed_form(8, 5)
    with pytest.raises(CombinatoricsError):
        nu_closed_form(1, 0)
    with pytest.raises(ValidationError):
        transition_coefficients(2)


def test_generating_polys():
    polys = generating_polys(8)
    assert polys.xi == [1, 8, 20, 16, 2]
    assert polys.lam == [0, 8, 40, 48, 8]
    assert polys.evaluate_xi(1.0) == 47
    assert partition_function(8, 1.0) == 47


@pytest.mark.parametrize("z", [0.3, 0.7, 1.0, 2.5])
def test_lambda_is_z_times_xi_derivative(z):
    polys = generating_polys(13)
    derivative = np.polynomial.polynomial.polyder(polys.xi)
    expected = z * np.polynomial.polynomial.polyval(z, derivative)
    assert polys.evaluate_lambda(z) == pytest.approx(expected, rel=1e-12)


def test_ring_density_matches_partition_function():
    length, z = 12, 0.7
    nu = np.array([nu_closed_form(length, n) for n in range(length // 2 + 1)], dtype=float)
    weights = nu * z ** np.arange(nu.size)
    expected = (np.arange(nu.size) @ weights) / (length * weights.sum())
    assert ring_density(length, z) == pytest.approx(expected, rel=1e-12)


def test_ring_density_approaches_bulk():
    assert ring_density(400, 1.0) == pytest.approx(bulk_density(1.0), rel=1e-10)
    assert bulk_density(1.0) == pytest.approx(0.5 * (1 - 1 / np.sqrt(5)))
    with pytest.raises(ValidationError):
        bulk_density(0.0)


def test_census_from_empty_state(ring8):
    census = transition_census(ring8, 0)
    assert (census.loops, census.reflections, census.transmissions) == (8, 0, 40)
    assert census.pair_weighted_ratio == 0.0


def test_census_single_excitations(ring8):
    census = transition_census(ring8, 1)
    assert (census.loops, census.reflections, census.transmissions) == (48, 96, 96)
    assert census.total == 240
    assert census.reflection_partners == pytest.approx(7.0)
    assert census.raw_ratio == pytest.approx(2.0)


def test_census_rejects_missing_column(ring8):
    with pytest.raises(CombinatoricsError):
        transition_census(ring8, 7)


def test_coefficient_table():
    table = coefficient_table(8)
    assert list(table.columns) == ["L", "n", "nu_n", "c_down", "T_down", "T_up"]
    assert table["nu_n"].tolist() == [1, 8, 20, 16, 2]
    assert table.loc[1, "T_up"] == 5.0
    assert (table["L"] == 8).all()
