from fractions import Fraction
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class ExcitationDistribution(BaseModel):
    """Distribution p_n over n = 0 … n_max at time Ωt."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    p: np.ndarray
    omega_t: float = 0.0

    @field_validator("p", mode="before")
    @classmethod
    def to_readonly_array(cls, v):
        array = np.array(v, dtype=float, copy=True)
        if array.ndim != 1 or array.size == 0:
            raise ValueError("p must be a non-empty one-dimensional vector")
        array.setflags(write=False)
        return array

    @property
    def n_max(self) -> int:
        return self.p.size - 1

    @property
    def total(self) -> float:
        return float(self.p.sum())

    @property
    def mean(self) -> float:
        return float(np.arange(self.p.size) @ self.p)

    @property
    def second_moment(self) -> float:
        n = np.arange(self.p.size)
        return float((n * n) @ self.p)

    @property
    def variance(self) -> float:
        return self.second_moment - self.mean ** 2

    def normalized(self) -> "ExcitationDistribution":
        total = self.total
        if total <= 0:
            raise ValueError("Cannot normalize an all-zero distribution")
        return ExcitationDistribution(p=self.p / total, omega_t=self.omega_t)


class RateMatrix(BaseModel):
    """Birth-death generator of the excitation-number Master equation.

    W_{n-1,n} = T_{n→n-1}, W_{n+1,n} = T_{n→n+1}, W_{n,n} = −(T_{n→n-1} + T_{n→n+1}).
    The explicit 2Ω²t rate prefactor is applied by the solver, not stored here.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    t_down: np.ndarray
    t_up: np.ndarray
    source: str = "closed-form"

    @field_validator("t_down", "t_up", mode="before")
    @classmethod
    def to_readonly_array(cls, v):
        array = np.array(v, dtype=float, copy=True)
        array.setflags(write=False)
        return array

    @model_validator(mode="after")
    def validate_rates(self):
        if self.t_down.shape != self.t_up.shape or self.t_up.ndim != 1 or self.t_up.size == 0:
            raise ValueError("t_down and t_up must be equal-length vectors")
        if np.any(self.t_down < 0) or np.any(self.t_up < 0):
            raise ValueError("Transition coefficients must be non-negative")
        if self.t_down[0] != 0 or self.t_up[-1] != 0:
            raise ValueError("No flux outside [0, n_max]: need T_{0→-1} = 0 and T_{n_max→n_max+1} = 0")
        return self

    @property
    def n_max(self) -> int:
        return self.t_up.size - 1

    def generator(self) -> np.ndarray:
        size = self.t_up.size
        w = np.zeros((size, size))
        w[np.arange(size), np.arange(size)] = -(self.t_down + self.t_up)
        w[np.arange(size - 1), np.arange(1, size)] = self.t_down[1:]
        w[np.arange(1, size), np.arange(size - 1)] = self.t_up[:-1]
        return w

    def stationary(self) -> np.ndarray:
        """Detailed-balance solution p_{n+1}/p_n = T_{n→n+1}/T_{n+1→n}, normalized."""
        if np.any(self.t_down[1:] == 0):
            raise ValueError("Stationary distribution needs T_{n→n-1} > 0 for n >= 1")
        a = np.ones(self.t_up.size)
        a[1:] = np.cumprod(self.t_up[:-1] / self.t_down[1:])
        return a / a.sum()


class EquilibriumDistribution(BaseModel):
    """Closed-form equilibrium with its raw (prefactor-normalized) sum."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    length: int
    raw: np.ndarray
    raw_sum: float
    normalized: ExcitationDistribution


class RelaxationFit(BaseModel):
    model_config = ConfigDict(frozen=True)

    lam: float
    intercept: float
    r_squared: float
    residual_rms: float
    points: int


class DimerCounts(BaseModel):
    """Exact hard-dimer counts and Master-equation coefficients for a ring of L sites."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    length: int
    nu: List[int]
    c_down: List[int]
    t_down: List[Fraction]
    t_up: List[Fraction]

    @property
    def n_max(self) -> int:
        return len(self.nu) - 1


class GeneratingPolys(BaseModel):
    """Integer coefficients of Ξ(z) = Σ ν_n zⁿ and Λ(z) = Σ c_{n→n-1} zⁿ."""

    model_config = ConfigDict(frozen=True)

    length: int
    xi: List[int]
    lam: List[int]

    def evaluate_xi(self, z: float) -> float:
        return float(sum(c * z ** k for k, c in enumerate(self.xi)))

    def evaluate_lambda(self, z: float) -> float:
        return float(sum(c * z ** k for k, c in enumerate(self.lam)))


class TransitionCensus(BaseModel):
    """Counts of ordered length-2 walks starting in column n, by endpoint type."""

    model_config = ConfigDict(frozen=True)

    length: Optional[int] = None
    n: int
    column_size: int = Field(ge=1)
    loops: int = Field(ge=0)
    reflections: int = Field(ge=0)
    transmissions: int = Field(ge=0)
    reflection_partners: float = Field(ge=0, description="mean number of distinct same-column partners per state")

    @property
    def total(self) -> int:
        return self.loops + self.reflections + self.transmissions

    @property
    def raw_ratio(self) -> float:
        return self.reflections / self.loops if self.loops else 0.0

    @property
    def pair_weighted_ratio(self) -> float:
        """Reflection weight between two random distinct states relative to a loop."""
        if self.column_size < 2 or self.loops == 0:
            return 0.0
        return self.reflections / (self.loops * (self.column_size - 1))
