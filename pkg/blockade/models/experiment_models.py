from enum import Enum
from typing import Any, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from blockade.models.lattice_models import Lattice, LatticeKind


class SolverKind(str, Enum):
    QUANTUM = "quantum"
    MASTER = "master"
    FPE = "fpe"


class TimeGrid(BaseModel):
    """Uniform grid of Ωt values, endpoints included."""

    model_config = ConfigDict(frozen=True)

    start: float = Field(default=0.0, ge=0)
    stop: float
    samples: int = Field(ge=1)

    @model_validator(mode="after")
    def validate_order(self):
        if self.samples > 1 and self.stop <= self.start:
            raise ValueError(f"Time grid must be ascending: start={self.start}, stop={self.stop}")
        if self.samples == 1 and self.stop < self.start:
            raise ValueError("Time grid stop precedes start")
        return self

    def values(self) -> np.ndarray:
        if self.samples == 1:
            return np.array([self.stop])
        return np.linspace(self.start, self.stop, self.samples)


class InitialStateSpec(BaseModel):
    """Either an explicit configuration or `count` seeded random picks from a column."""

    model_config = ConfigDict(frozen=True)

    bits: Optional[str] = None
    column: Optional[int] = Field(default=None, ge=0)
    seed: Optional[int] = None
    count: int = Field(default=1, ge=1)

    @model_validator(mode="after")
    def validate_choice(self):
        if (self.bits is None) == (self.column is None):
            raise ValueError("Specify exactly one of an explicit bit string or a column")
        if self.column is not None and self.seed is None:
            raise ValueError("A seed is mandatory when random initial states are requested")
        if self.bits is not None and self.count != 1:
            raise ValueError("An explicit initial state has count 1")
        return self


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str = "experiment"
    lattice: Lattice
    initial: InitialStateSpec
    time_grid: TimeGrid
    solvers: List[SolverKind] = Field(default_factory=lambda: [SolverKind.QUANTUM, SolverKind.MASTER])
    omega: float = Field(default=1.0, gt=0)
    output_dir: str = "./runs/experiment"

    @model_validator(mode="after")
    def validate_solvers(self):
        if not self.solvers:
            raise ValueError("At least one solver must be selected")
        if SolverKind.FPE in self.solvers and self.lattice.kind != LatticeKind.RING:
            raise ValueError("The Fokker-Planck description is defined for rings only")
        return self


class ComparisonReport(BaseModel):
    """Distance between two excitation-number trajectories on a shared time grid."""

    model_config = ConfigDict(frozen=True)

    label_a: str
    label_b: str
    omega_t: List[float]
    tv: List[float]
    ks: List[float]
    max_tv: float = Field(ge=0, le=1)
    mean_tv: float = Field(ge=0, le=1)
    equilibrium_tv: Optional[float] = Field(default=None, ge=0, le=1)


class SweepRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    length: int
    n0: int
    seed: int
    rms: float = Field(ge=0)


class SweepSummary(BaseModel):
    model_config = ConfigDict(frozen=True)

    window: List[float]
    rows: List[SweepRow]
    rms_by_length: Dict[int, float]


class CriterionResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    key: str
    title: str
    passed: bool
    measured: Dict[str, Any] = Field(default_factory=dict)
    mode: str = "full"
    error: Optional[str] = None


class ValidationSummary(BaseModel):
    model_config = ConfigDict(frozen=True)

    mode: str
    results: List[CriterionResult]

    @property
    def passed(self) -> bool:
        return all(result.passed for result in self.results)


class ExperimentReport(BaseModel):
    """Outcome of one experiment run: every pairwise comparison plus stage wall times."""

    model_config = ConfigDict(frozen=True)

    name: str
    output_dir: str
    state_count: int
    initial_states: List[str]
    comparisons: List[ComparisonReport]
    wall_times: Dict[str, float] = Field(default_factory=dict)

    def comparison(self, label_a: str, label_b: str) -> ComparisonReport:
        for report in self.comparisons:
            if (report.label_a, report.label_b) == (label_a, label_b):
                return report
        raise KeyError(f"No comparison between {label_a} and {label_b}")
