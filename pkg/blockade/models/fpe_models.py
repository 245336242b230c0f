from enum import Enum
from typing import List

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator


def _readonly(v):
    array = np.array(v, dtype=float, copy=True)
    if array.ndim != 1:
        raise ValueError(f"Expected a one-dimensional array, got shape {array.shape}")
    array.setflags(write=False)
    return array


class JacobianConvention(str, Enum):
    # J = [2·L·D(x)]^(-1/2): L-independent y(x), J(0) = 1/√2
    SCALED = "scaled"
    # J = D(x)^(-1/2): y grows like √L
    LITERAL = "literal"


class FpeField(BaseModel):
    """Drift F(x) and diffusion D(x) tabulated on a grid in [0, ½]."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    length: int = Field(ge=3)
    grid: np.ndarray
    drift: np.ndarray
    diffusion: np.ndarray

    @field_validator("grid", "drift", "diffusion", mode="before")
    @classmethod
    def to_readonly_array(cls, v):
        return _readonly(v)


class FpeSnapshot(BaseModel):
    """Probability density on the cell-centred grid at time Ωt."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    omega_t: float
    grid: np.ndarray
    density: np.ndarray

    @field_validator("grid", "density", mode="before")
    @classmethod
    def to_readonly_array(cls, v):
        return _readonly(v)

    @property
    def spacing(self) -> float:
        return float(self.grid[1] - self.grid[0])

    @property
    def mass(self) -> float:
        return float(self.density.sum() * self.spacing)

    @property
    def mean(self) -> float:
        return float((self.grid * self.density).sum() * self.spacing)

    @property
    def std(self) -> float:
        second = float((self.grid ** 2 * self.density).sum() * self.spacing)
        return float(np.sqrt(max(second - self.mean ** 2, 0.0)))


class TransformedField(BaseModel):
    """Constant-diffusion coordinate y(x) with Jacobian J, effective force F̃ and potential U."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    length: int
    convention: JacobianConvention
    x: np.ndarray
    y: np.ndarray
    jacobian: np.ndarray
    force: np.ndarray
    potential: np.ndarray

    @field_validator("x", "y", "jacobian", "force", "potential", mode="before")
    @classmethod
    def to_readonly_array(cls, v):
        return _readonly(v)

    @property
    def potential_minimum_x(self) -> float:
        return float(self.x[int(np.argmin(self.potential))])


class QuadraticFit(BaseModel):
    """y(x) ≈ a1·x + a2·x² over the transform grid."""

    model_config = ConfigDict(frozen=True)

    a1: float
    a2: float
    relative_residual: float

    def __call__(self, x):
        return self.a1 * np.asarray(x) + self.a2 * np.asarray(x) ** 2


class ConsistencyReport(BaseModel):
    """Master equation vs Fokker-Planck solution, compared on excitation-number bins."""

    model_config = ConfigDict(frozen=True)

    length: int
    n0: int
    omega_t: List[float]
    tv: List[float]
    max_tv: float
    final_tv: float
    master_mean_x: float
    fpe_mean_x: float
    master_stationary_mean_x: float
    fpe_stationary_mean_x: float
