import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator


class ModelParams(BaseModel):
    """Rabi coupling of the constrained Hamiltonian; sets the time unit."""

    model_config = ConfigDict(frozen=True)

    omega: float = Field(default=1.0, gt=0)


class StateVector(BaseModel):
    """Pure state |Ψ(t)⟩ over the ConfigSpace basis, stamped with Ωt."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    amplitudes: np.ndarray
    omega_t: float = 0.0

    @field_validator("amplitudes", mode="before")
    @classmethod
    def to_readonly_array(cls, v):
        array = np.array(v, dtype=np.complex128, copy=True)
        if array.ndim != 1:
            raise ValueError(f"Amplitudes must be one-dimensional, got shape {array.shape}")
        array.setflags(write=False)
        return array

    @property
    def dimension(self) -> int:
        return self.amplitudes.shape[0]

    @property
    def norm_squared(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)
