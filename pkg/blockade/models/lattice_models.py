from enum import Enum
from typing import List, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

MAX_SITES = 64


class LatticeKind(str, Enum):
    RING = "ring"
    TORUS = "torus"


class Lattice(BaseModel):
    """Periodic lattice geometry: a ring of L sites or an Lx×Ly torus.

    Sites are numbered x + Lx·y on the torus. Neighbor relations are collapsed to a
    set, so an extent of 2 yields a single adjacency pair instead of a doubled one.
    """

    model_config = ConfigDict(frozen=True)

    kind: LatticeKind
    extents: Tuple[int, ...]
    periodic: bool = True

    @field_validator("periodic")
    @classmethod
    def validate_periodic(cls, v):
        if not v:
            raise ValueError("Only periodic boundary conditions are supported")
        return v

    @model_validator(mode="after")
    def validate_extents(self):
        if self.kind == LatticeKind.RING:
            if len(self.extents) != 1 or self.extents[0] < 2:
                raise ValueError(f"Ring needs a single extent L >= 2, got {self.extents}")
        else:
            if len(self.extents) != 2 or min(self.extents) < 2:
                raise ValueError(f"Torus needs extents (Lx, Ly) with both >= 2, got {self.extents}")
        if self.n_sites > MAX_SITES:
            raise ValueError(f"{self.n_sites} sites exceed the {MAX_SITES}-bit configuration word")
        return self

    @classmethod
    def ring(cls, length: int) -> "Lattice":
        return cls(kind=LatticeKind.RING, extents=(length,))

    @classmethod
    def torus(cls, lx: int, ly: int) -> "Lattice":
        return cls(kind=LatticeKind.TORUS, extents=(lx, ly))

    @property
    def n_sites(self) -> int:
        total = 1
        for extent in self.extents:
            total *= extent
        return total

    @property
    def label(self) -> str:
        if self.kind == LatticeKind.RING:
            return f"ring-{self.extents[0]}"
        return f"torus-{self.extents[0]}x{self.extents[1]}"

    def site_neighbors(self, site: int) -> List[int]:
        if self.kind == LatticeKind.RING:
            (length,) = self.extents
            found = {(site - 1) % length, (site + 1) % length}
        else:
            lx, ly = self.extents
            x, y = site % lx, site // lx
            found = {
                (x - 1) % lx + lx * y,
                (x + 1) % lx + lx * y,
                x + lx * ((y - 1) % ly),
                x + lx * ((y + 1) % ly),
            }
        found.discard(site)
        return sorted(found)

    def neighbor_pairs(self) -> List[Tuple[int, int]]:
        pairs = set()
        for site in range(self.n_sites):
            for other in self.site_neighbors(site):
                pairs.add((min(site, other), max(site, other)))
        return sorted(pairs)

    def neighbor_masks(self) -> List[int]:
        masks = []
        for site in range(self.n_sites):
            mask = 0
            for other in self.site_neighbors(site):
                mask |= 1 << other
            masks.append(mask)
        return masks


class Configuration(BaseModel):
    """A blockade-allowed spin configuration: bit k set means site k is up."""

    model_config = ConfigDict(frozen=True)

    occupation: int = Field(ge=0)

    @property
    def n(self) -> int:
        return bin(self.occupation).count("1")

    @classmethod
    def from_bits(cls, bits: str) -> "Configuration":
        """Parse '0101…' (or ↓/↑) where the k-th character is site k."""
        table = {"0": "0", "1": "1", "↓": "0", "↑": "1", "d": "0", "u": "1"}
        try:
            cleaned = [table[c] for c in bits.strip()]
        except KeyError as e:
            raise ValueError(f"Invalid spin character {e} in {bits!r}") from e
        occupation = 0
        for site, c in enumerate(cleaned):
            if c == "1":
                occupation |= 1 << site
        return cls(occupation=occupation)

    def to_bits(self, n_sites: int) -> str:
        return "".join("1" if self.occupation >> k & 1 else "0" for k in range(n_sites))

    def is_allowed(self, lattice: Lattice) -> bool:
        if self.occupation >> lattice.n_sites:
            return False
        return all(
            not (self.occupation >> a & 1 and self.occupation >> b & 1)
            for a, b in lattice.neighbor_pairs()
        )
