import numpy as np
import pytest

from blockade.models.lattice_models import Configuration, Lattice
from blockade.services.lattice_service import (
    column_projection,
    enumerate_configurations,
    export_edge_list,
    export_summary,
    lucas_number,
    neighbors,
    popcount,
    predicted_state_count,
)
from blockade.utils.exceptions import CapacityError, DimensionMismatchError, ExportError


def test_popcount():
    words = np.array([0, 1, 0b1011, 2 ** 63 + 1], dtype=np.uint64)
    assert popcount(words).tolist() == [0, 1, 3, 2]


@pytest.mark.parametrize("length,expected", [(2, 3), (3, 4), (8, 47), (25, 167761)])
def test_lucas_number(length, expected):
    assert lucas_number(length) == expected


def test_ring_columns(ring8):
    assert ring8.size == 47
    assert ring8.column_sizes.tolist() == [1, 8, 20, 16, 2]
    assert ring8.excitations[ring8.column(2)].tolist() == [2] * 20


def test_states_sorted_by_column_then_occupation(ring8):
    keys = list(zip(ring8.excitations.tolist(), ring8.occupations.tolist()))
    assert keys == sorted(keys)


@pytest.mark.parametrize(
    "lattice,columns",
    [
        (Lattice.torus(3, 3), [1, 9, 18, 6]),
        (Lattice.torus(2, 2), [1, 4, 2]),
        (Lattice.ring(2), [1, 2]),
    ],
)
def test_small_lattices(lattice, columns):
    space = enumerate_configurations(lattice)
    assert space.column_sizes.tolist() == columns
    assert predicted_state_count(lattice) == sum(columns)


def test_every_state_is_allowed(ring12):
    lattice = ring12.lattice
    assert all(Configuration(occupation=int(o)).is_allowed(lattice) for o in ring12.occupations)


def test_adjacency_is_single_spin_flips(ring8):
    adjacency = ring8.adjacency
    assert (adjacency != adjacency.T).nnz == 0
    coo = adjacency.tocoo()
    flips = ring8.occupations[coo.row] ^ ring8.occupations[coo.col]
    assert popcount(flips).tolist() == [1] * coo.nnz


def test_index_of(ring8):
    for i in (0, 5, 46):
        assert ring8.index_of(int(ring8.occupations[i])) == i
    with pytest.raises(KeyError):
        ring8.index_of(0b11)


def test_neighbors_of_empty_state(ring8):
    assert sorted(ring8.excitations[neighbors(ring8, 0)].tolist()) == [1] * 8
    with pytest.raises(IndexError):
        neighbors(ring8, ring8.size)


def test_edges_between(ring8):
    assert [ring8.edges_between(n) for n in range(4)] == [8, 40, 48, 8]


def test_capacity_error_before_enumeration():
    with pytest.raises(CapacityError) as info:
        enumerate_configurations(Lattice.ring(10), max_states=100)
    assert info.value.predicted_states == 123
    assert info.value.budget == 100


def test_uniform_state_projection(ring8):
    psi = np.full(ring8.size, 1 / np.sqrt(ring8.size), dtype=complex)
    distribution = column_projection(ring8, psi)
    assert distribution.p == pytest.approx(np.array([1, 8, 20, 16, 2]) / 47)
    assert distribution.mean == pytest.approx(104 / 47)


def test_projection_rejects_wrong_dimension(ring8):
    with pytest.raises(DimensionMismatchError):
        column_projection(ring8, np.ones(10))


def test_export_edge_list(writer):
    space = enumerate_configurations(Lattice.ring(4))
    path = export_edge_list(space, writer)
    assert path.name == "ring-4_edges.txt"
    lines = path.read_text().splitlines()
    assert lines[0] == "# ring-4 states=7 edges=8"
    pairs = [tuple(map(int, line.split())) for line in lines[1:]]
    assert len(pairs) == 8
    assert all(i < j for i, j in pairs)


def test_export_summary(writer, ring8):
    path = export_summary(ring8, writer)
    assert path.name == "ring-8_summary.json"
    assert '"state_count": 47' in path.read_text()


def test_exports_are_atomic(writer, ring8, mocker):
    mocker.patch("blockade.services.export_service.os.replace", side_effect=OSError("disk full"))
    with pytest.raises(ExportError):
        export_edge_list(ring8, writer, "edges.txt")
    with pytest.raises(ExportError):
        export_summary(ring8, writer, "summary.json")
    assert list(writer.output_path.iterdir()) == []


def test_index_of_uses_frozen_sorted_keys(ring8):
    keys = ring8._sorted_keys
    assert not keys.flags.writeable
    assert np.all(keys[:-1] < keys[1:])
    ring8.index_of(int(ring8.occupations[5]))
    assert ring8._sorted_keys is keys


def test_lattice_validation():
    with pytest.raises(ValueError):
        Lattice.ring(1)
    with pytest.raises(ValueError):
        Lattice.torus(9, 8)
    assert Lattice.torus(4, 3).label == "torus-4x3"


def test_configuration_bits():
    configuration = Configuration.from_bits("0101")
    assert configuration.occupation == 0b1010
    assert configuration.n == 2
    assert configuration.to_bits(4) == "0101"
    assert configuration.is_allowed(Lattice.ring(4))
    assert not Configuration.from_bits("1100").is_allowed(Lattice.ring(4))
    assert Configuration.from_bits("↓↑↓↑") == configuration
    with pytest.raises(ValueError):
        Configuration.from_bits("01x")


def test_neighbors_are_single_allowed_flips(ring8):
    index = ring8.index_of(Configuration.from_bits("01010000").occupation)
    reachable = {int(ring8.occupations[j]) for j in neighbors(ring8, index)}
    assert Configuration.from_bits("01010010").occupation in reachable
    assert Configuration.from_bits("01001010").occupation not in reachable
    assert index not in neighbors(ring8, index).tolist()


def test_maximal_configuration_only_loses_excitations(ring8):
    index = ring8.index_of(Configuration.from_bits("10101010").occupation)
    assert ring8.excitations[neighbors(ring8, index)].tolist() == [3, 3, 3, 3]


def test_projection_of_zero_vector(ring8):
    assert column_projection(ring8, np.zeros(ring8.size)).p.tolist() == [0.0] * 5


def test_enumeration_is_deterministic():
    first = enumerate_configurations(Lattice.torus(3, 3))
    second = enumerate_configurations(Lattice.torus(3, 3))
    assert np.array_equal(first.occupations, second.occupations)
    assert (first.adjacency != second.adjacency).nnz == 0
