"""Blockade-constrained configuration space and its spin-flip graph.

States are single 64-bit occupation words. The space is sorted by (n, occupation);
column n is the contiguous block of states with n excitations, and the spin-flip
adjacency is stored as a CSR matrix whose `indptr`/`indices` are the flat
per-state neighbor lists.
"""
import io
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np
import scipy.sparse as sp

from blockade.config import settings
from blockade.models.kinetics_models import ExcitationDistribution
from blockade.models.lattice_models import Lattice, LatticeKind
from blockade.models.quantum_models import StateVector
from blockade.services.export_service import ArtifactWriter
from blockade.utils.exceptions import CapacityError, EnumerationError
from blockade.utils.logger import get_logger
from blockade.utils.validators import validate_dimension

logger = get_logger(__name__)

_POPCOUNT_TABLE = np.array([bin(i).count("1") for i in range(256)], dtype=np.int64)


def popcount(words: np.ndarray) -> np.ndarray:
    """Number of set bits of each uint64 word."""
    words = np.ascontiguousarray(words, dtype=np.uint64)
    return _POPCOUNT_TABLE[words.view(np.uint8).reshape(-1, 8)].sum(axis=1)


def lucas_number(length: int) -> int:
    """Lucas(L), the number of allowed configurations of an L-ring."""
    a, b = 2, 1
    for _ in range(length):
        a, b = b, a + b
    return a


def _ring_row_sets(width: int) -> List[int]:
    """Independent sets of a cycle of `width` sites (a single torus row)."""
    if width == 2:
        return [0b00, 0b01, 0b10]
    full = (1 << width) - 1
    return [
        mask for mask in range(1 << width)
        if mask & (((mask << 1) | (mask >> (width - 1))) & full) == 0
    ]


def predicted_state_count(lattice: Lattice) -> int:
    """Exact number of blockade-allowed configurations, without enumerating them."""
    if lattice.kind == LatticeKind.RING:
        (length,) = lattice.extents
        return lucas_number(length)
    lx, ly = lattice.extents
    rows = _ring_row_sets(lx)
    transfer = [[1 if a & b == 0 else 0 for b in rows] for a in rows]
    if ly == 2:
        # the two vertical wrap edges coincide: one constraint between the rows
        return sum(sum(row) for row in transfer)
    power = [[int(i == j) for j in range(len(rows))] for i in range(len(rows))]
    for _ in range(ly):
        power = [
            [sum(power[i][k] * transfer[k][j] for k in range(len(rows))) for j in range(len(rows))]
            for i in range(len(rows))
        ]
    return sum(power[i][i] for i in range(len(rows)))


class ConfigSpace:
    """Immutable enumerated configuration space of a lattice."""

    def __init__(self, lattice: Lattice, occupations: np.ndarray, adjacency: sp.csr_matrix):
        self.lattice = lattice
        self.occupations = occupations
        self.excitations = popcount(occupations)
        self.column_sizes = np.bincount(self.excitations)
        self.column_offsets = np.concatenate([[0], np.cumsum(self.column_sizes)])
        self.adjacency = adjacency
        self.degrees = np.diff(adjacency.indptr)
        self._lookup = np.argsort(occupations, kind="stable")
        self._sorted_keys = occupations[self._lookup]
        for array in (self.occupations, self.excitations, self.column_sizes,
                      self.column_offsets, self.degrees, self._lookup, self._sorted_keys):
            array.setflags(write=False)

    @property
    def size(self) -> int:
        return int(self.occupations.shape[0])

    @property
    def n_max(self) -> int:
        return int(self.column_sizes.size - 1)

    def column(self, n: int) -> slice:
        if not 0 <= n <= self.n_max:
            raise IndexError(f"Column {n} outside 0..{self.n_max}")
        return slice(int(self.column_offsets[n]), int(self.column_offsets[n + 1]))

    def index_of(self, occupation: int) -> int:
        """Position of an occupation word in the space; KeyError when it is not allowed."""
        keys = self._sorted_keys
        pos = int(np.searchsorted(keys, np.uint64(occupation)))
        if pos >= keys.size or int(keys[pos]) != occupation:
            raise KeyError(f"Configuration {occupation:#x} is not in the space")
        return int(self._lookup[pos])

    def edges_between(self, n: int) -> int:
        """Number of adjacency edges joining column n and column n+1."""
        rows = self.column(n)
        start, stop = self.adjacency.indptr[rows.start], self.adjacency.indptr[rows.stop]
        targets = self.adjacency.indices[start:stop]
        return int(np.count_nonzero(self.excitations[targets] == n + 1))

    def summary(self) -> Dict:
        return {
            "lattice": self.lattice.label,
            "kind": self.lattice.kind.value,
            "extents": list(self.lattice.extents),
            "n_sites": self.lattice.n_sites,
            "state_count": self.size,
            "column_sizes": [int(v) for v in self.column_sizes],
            "edge_count": int(self.adjacency.nnz // 2),
            "edges_between_columns": [self.edges_between(n) for n in range(self.n_max)],
        }


def _independent_sets(lattice: Lattice) -> np.ndarray:
    """All blockade-allowed occupation words, grown one site at a time."""
    masks = lattice.neighbor_masks()
    states = np.zeros(1, dtype=np.uint64)
    for site in range(lattice.n_sites):
        earlier = np.uint64(masks[site] & ((1 << site) - 1))
        allowed = (states & earlier) == 0
        states = np.concatenate([states, states[allowed] | np.uint64(1 << site)])
    return states


def _flip_adjacency(lattice: Lattice, occupations: np.ndarray) -> sp.csr_matrix:
    """Single-site flip graph over `occupations` as a symmetric 0/1 CSR matrix.

    A site can be emptied whenever it is occupied and filled only when its whole
    neighborhood is empty. Row indices inside each row are sorted.
    """
    size = occupations.shape[0]
    lookup = np.argsort(occupations, kind="stable")
    keys = occupations[lookup]
    sources, targets = [], []
    for site, neighborhood in enumerate(lattice.neighbor_masks()):
        bit = np.uint64(1 << site)
        occupied = (occupations & bit) != 0
        addable = ~occupied & ((occupations & np.uint64(neighborhood)) == 0)
        movable = np.flatnonzero(occupied | addable)
        flipped = occupations[movable] ^ bit
        sources.append(movable.astype(np.int32))
        targets.append(lookup[np.searchsorted(keys, flipped)].astype(np.int32))
    src = np.concatenate(sources)
    dst = np.concatenate(targets)
    order = np.lexsort((dst, src))
    src, dst = src[order], dst[order]
    indptr = np.concatenate([[0], np.cumsum(np.bincount(src, minlength=size))]).astype(np.int64)
    return sp.csr_matrix((np.ones(dst.size), dst, indptr), shape=(size, size))


def enumerate_configurations(lattice: Lattice, max_states: Optional[int] = None) -> ConfigSpace:
    """Enumerate all blockade-allowed configurations of `lattice` with their flip graph.

    The state count is predicted exactly first and checked against the memory budget;
    the enumeration is then cross-checked against that prediction.
    """
    budget = max_states or settings.max_states
    predicted = predicted_state_count(lattice)
    if predicted > budget:
        logger.error("capacity_exceeded", lattice=lattice.label, predicted=predicted, budget=budget)
        raise CapacityError(
            f"{lattice.label} has {predicted} allowed configurations, above the budget of {budget}",
            predicted_states=predicted,
            budget=budget,
        )

    states = _independent_sets(lattice)
    if states.shape[0] != predicted:
        raise EnumerationError(
            f"Enumerated {states.shape[0]} states for {lattice.label}, transfer-matrix count is {predicted}"
        )
    counts = popcount(states)
    states = states[np.lexsort((states, counts))]
    adjacency = _flip_adjacency(lattice, states)

    space = ConfigSpace(lattice, states, adjacency)
    logger.info(
        "space_enumerated",
        lattice=lattice.label,
        states=space.size,
        edges=int(adjacency.nnz // 2),
        columns=[int(v) for v in space.column_sizes],
    )
    return space


def neighbors(space: ConfigSpace, state_index: int) -> np.ndarray:
    """Indices of the states one allowed spin flip away."""
    if not 0 <= state_index < space.size:
        raise IndexError(f"State index {state_index} outside 0..{space.size - 1}")
    indptr = space.adjacency.indptr
    return space.adjacency.indices[indptr[state_index]:indptr[state_index + 1]]


def column_projection(space: ConfigSpace, amplitudes: Union[StateVector, np.ndarray]) -> ExcitationDistribution:
    """p_n = Σ_{states in column n} |ψ|²."""
    omega_t = 0.0
    if isinstance(amplitudes, StateVector):
        omega_t = amplitudes.omega_t
        amplitudes = amplitudes.amplitudes
    amplitudes = np.asarray(amplitudes)
    validate_dimension(amplitudes, space.size, "amplitude vector")
    weights = np.abs(amplitudes) ** 2
    p = np.bincount(space.excitations, weights=weights, minlength=space.n_max + 1)
    return ExcitationDistribution(p=p, omega_t=omega_t)


def export_edge_list(space: ConfigSpace, writer: ArtifactWriter, name: Optional[str] = None) -> Path:
    """Write one `i j` line per undirected edge (i < j), preceded by a `#` header.

    Defaults to `<lattice>_edges.txt` inside the writer's output directory.
    """
    coo = sp.triu(space.adjacency, k=1).tocoo()
    order = np.lexsort((coo.col, coo.row))
    buffer = io.StringIO()
    buffer.write(f"# {space.lattice.label} states={space.size} edges={coo.nnz}\n")
    np.savetxt(buffer, np.column_stack([coo.row[order], coo.col[order]]), fmt="%d", newline="\n")
    return writer.write_text(name or f"{space.lattice.label}_edges.txt", buffer.getvalue())


def export_summary(space: ConfigSpace, writer: ArtifactWriter, name: Optional[str] = None) -> Path:
    """Write `ConfigSpace.summary()` as `<lattice>_summary.json`."""
    return writer.write_json(name or f"{space.lattice.label}_summary.json", space.summary())
