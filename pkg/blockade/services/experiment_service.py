import hashlib
import json
import platform
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from contextlib import contextmanager
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import pydantic
import scipy

import blockade
from blockade.config import settings
from blockade.models.experiment_models import (
    ComparisonReport,
    ExperimentConfig,
    ExperimentReport,
    SolverKind,
    SweepRow,
    SweepSummary,
)
from blockade.models.kinetics_models import ExcitationDistribution, RateMatrix
from blockade.models.lattice_models import Configuration, Lattice, LatticeKind
from blockade.models.quantum_models import ModelParams, StateVector
from blockade.services.export_service import (
    ArtifactWriter,
    field_frame,
    rates_payload,
    snapshot_frame,
    trajectory_frame,
)
from blockade.services.fokker_planck_service import (
    bin_to_columns,
    cell_grid,
    column_density,
    consistency_cells,
    fields,
    solve_fpe,
    transform,
)
from blockade.services.lattice_service import ConfigSpace, column_projection, enumerate_configurations
from blockade.services.master_service import build_rates_1d, build_rates_2d, solve_master
from blockade.services.quantum_service import basis_state, propagate, random_column_state
from blockade.utils.distances import kolmogorov_smirnov, total_variation
from blockade.utils.exceptions import BlockadeError, ExperimentError, ValidationError
from blockade.utils.logger import get_logger

logger = get_logger(__name__)


def compare_distributions(
    label_a: str,
    trajectory_a: Sequence[ExcitationDistribution],
    label_b: str,
    trajectory_b: Sequence[ExcitationDistribution],
    equilibrium: Optional[ExcitationDistribution] = None,
) -> ComparisonReport:
    """Per-sample TV (primary) and KS (secondary) between two trajectories on the same grid."""
    if len(trajectory_a) != len(trajectory_b) or not trajectory_a:
        raise ValidationError(f"Trajectories {label_a}/{label_b} have {len(trajectory_a)}/{len(trajectory_b)} samples")
    times_a = np.array([d.omega_t for d in trajectory_a])
    times_b = np.array([d.omega_t for d in trajectory_b])
    if not np.allclose(times_a, times_b, rtol=0, atol=1e-12):
        raise ValidationError(f"Trajectories {label_a}/{label_b} are sampled on different time grids")
    tv = [total_variation(a.p, b.p) for a, b in zip(trajectory_a, trajectory_b)]
    ks = [kolmogorov_smirnov(a.p, b.p) for a, b in zip(trajectory_a, trajectory_b)]
    return ComparisonReport(
        label_a=label_a,
        label_b=label_b,
        omega_t=times_a.tolist(),
        tv=tv,
        ks=ks,
        max_tv=max(tv),
        mean_tv=float(np.mean(tv)),
        equilibrium_tv=None if equilibrium is None else total_variation(trajectory_a[-1].p, equilibrium.p),
    )


def config_digest(config: ExperimentConfig) -> str:
    """sha256 of the canonical JSON form of the config."""
    payload = json.dumps(config.model_dump(mode="json"), sort_keys=True)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def package_versions() -> Dict[str, str]:
    """Installed versions of the numerical stack, for the manifest."""
    return {
        "blockade": blockade.__version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "pandas": pd.__version__,
        "pydantic": pydantic.VERSION,
    }


class ExperimentRunner:
    """Runs the stages of one experiment and writes its artifacts.

    Stages: enumerate, initial, quantum, master, fpe, compare. Any failure is
    re-raised as ExperimentError naming the stage.
    """

    def __init__(self, config: ExperimentConfig, writer: Optional[ArtifactWriter] = None):
        self.config = config
        self.writer = writer or ArtifactWriter(config.output_dir)
        self.params = ModelParams(omega=config.omega)
        self.wall_times: Dict[str, float] = {}
        self.space: Optional[ConfigSpace] = None
        self.initial: List[Tuple[str, StateVector, int]] = []
        self.trajectories: Dict[str, List[ExcitationDistribution]] = {}
        self.master_rates: Optional[RateMatrix] = None

    @contextmanager
    def _stage(self, name: str):
        started = time.perf_counter()
        try:
            yield
        except ExperimentError:
            raise
        except Exception as e:
            logger.error("stage_failed", experiment=self.config.name, stage=name, error=str(e))
            raise ExperimentError(f"Stage '{name}' failed: {e}", stage=name) from e
        finally:
            self.wall_times[name] = time.perf_counter() - started
        logger.info("stage_complete", experiment=self.config.name, stage=name, seconds=self.wall_times[name])

    def _enumerate(self):
        self.space = enumerate_configurations(self.config.lattice)
        self.writer.write_json("space.json", self.space.summary())

    def _initial_states(self):
        """Explicit bits, or `count` seeded random states from one column."""
        spec, space = self.config.initial, self.space
        if spec.bits is not None:
            configuration = Configuration.from_bits(spec.bits)
            self.initial.append(("quantum", basis_state(space, configuration), configuration.n))
            return
        for k in range(spec.count):
            seed = spec.seed + k
            state, occupation = random_column_state(space, spec.column, seed)
            label = "quantum" if spec.count == 1 else f"quantum_seed{seed}"
            self.initial.append((label, state, spec.column))
            logger.info(
                "initial_state_drawn",
                seed=seed,
                bits=Configuration(occupation=occupation).to_bits(space.lattice.n_sites),
            )

    def _quantum(self, omega_times: np.ndarray):
        for label, state, _ in self.initial:
            states = propagate(self.space, self.params, state, omega_times)
            trajectory = [column_projection(self.space, s) for s in states]
            self.trajectories[label] = trajectory
            self.writer.write_frame(f"{label}.csv", trajectory_frame(trajectory))

    def _initial_column(self) -> int:
        """Excitation number shared by all initial states."""
        columns = {n for _, _, n in self.initial}
        if len(columns) != 1:
            raise ValidationError(f"Initial states span several columns: {sorted(columns)}")
        return columns.pop()

    def _master(self, omega_times: np.ndarray):
        lattice = self.config.lattice
        if lattice.kind == LatticeKind.RING:
            self.master_rates = build_rates_1d(lattice.extents[0])
        else:
            self.master_rates = build_rates_2d(self.space)
        p0 = np.zeros(self.master_rates.n_max + 1)
        p0[self._initial_column()] = 1.0
        trajectory = solve_master(self.master_rates, ExcitationDistribution(p=p0), omega_times)
        self.trajectories["master"] = trajectory
        self.writer.write_json("rates.json", rates_payload(self.master_rates))
        self.writer.write_frame("master.csv", trajectory_frame(trajectory))

    def _fpe(self, omega_times: np.ndarray):
        length = self.config.lattice.extents[0]
        field = fields(length, cell_grid(consistency_cells(length)))
        snapshots = solve_fpe(field, column_density(field.grid, self._initial_column(), length), omega_times)
        trajectory = [bin_to_columns(snapshot, length) for snapshot in snapshots]
        self.trajectories["fpe"] = trajectory
        self.writer.write_frame("fpe_field.csv", field_frame(field, transform(field)))
        self.writer.write_frame("fpe_density.csv", snapshot_frame(snapshots))
        self.writer.write_frame("fpe.csv", trajectory_frame(trajectory))

    def _compare(self) -> List[ComparisonReport]:
        """TV/KS report for every pair of trajectories except quantum against quantum."""
        equilibrium = None
        if self.master_rates is not None:
            equilibrium = ExcitationDistribution(p=self.master_rates.stationary())
        labels = list(self.trajectories)
        reports = []
        for i, label_a in enumerate(labels):
            for label_b in labels[i + 1:]:
                if label_a.startswith("quantum") and label_b.startswith("quantum"):
                    continue
                reports.append(
                    compare_distributions(
                        label_a, self.trajectories[label_a], label_b, self.trajectories[label_b], equilibrium
                    )
                )
        self.writer.write_json("report.json", {"comparisons": reports})
        return reports

    def _bits_of(self, state: StateVector) -> str:
        occupation = int(self.space.occupations[int(np.argmax(np.abs(state.amplitudes)))])
        return Configuration(occupation=occupation).to_bits(self.space.lattice.n_sites)

    def run(self) -> ExperimentReport:
        """Run the configured stages in order and write the manifest."""
        config = self.config
        omega_times = config.time_grid.values()
        logger.info("experiment_started", experiment=config.name, lattice=config.lattice.label)

        with self._stage("enumerate"):
            self._enumerate()
        with self._stage("initial"):
            self._initial_states()
        if SolverKind.QUANTUM in config.solvers:
            with self._stage("quantum"):
                self._quantum(omega_times)
        if SolverKind.MASTER in config.solvers:
            with self._stage("master"):
                self._master(omega_times)
        if SolverKind.FPE in config.solvers:
            with self._stage("fpe"):
                self._fpe(omega_times)
        with self._stage("compare"):
            comparisons = self._compare()

        initial_bits = [self._bits_of(state) for _, state, _ in self.initial]
        spec = config.initial
        seeds = [] if spec.seed is None else [spec.seed + k for k in range(spec.count)]
        report = ExperimentReport(
            name=config.name,
            output_dir=str(self.writer.output_path),
            state_count=self.space.size,
            initial_states=initial_bits,
            comparisons=comparisons,
            wall_times=dict(self.wall_times),
        )
        self.writer.write_json(
            "manifest.json",
            {
                "config": config.model_dump(mode="json"),
                "config_sha256": config_digest(config),
                "omega_t": omega_times,
                "state_count": self.space.size,
                "initial_states": initial_bits,
                "seeds": seeds,
                "versions": package_versions(),
                "wall_times": self.wall_times,
            },
        )
        logger.info(
            "experiment_complete",
            experiment=config.name,
            comparisons=len(comparisons),
            max_tv=max((r.max_tv for r in comparisons), default=0.0),
        )
        return report


def run_experiment(config: ExperimentConfig, writer: Optional[ArtifactWriter] = None) -> ExperimentReport:
    return ExperimentRunner(config, writer).run()


def _sweep_length(length: int, n0: int, seeds: Sequence[int], window: Tuple[float, float], samples: int, omega: float):
    """Quantum ⟨x⟩(t) against the Master mean for every seed at one ring length."""
    space = enumerate_configurations(Lattice.ring(length))
    params = ModelParams(omega=omega)
    omega_times = np.linspace(window[0], window[1], samples)
    rates = build_rates_1d(length)
    p0 = np.zeros(rates.n_max + 1)
    p0[n0] = 1.0
    reference = np.array([d.mean for d in solve_master(rates, ExcitationDistribution(p=p0), omega_times)]) / length
    rows = []
    for seed in seeds:
        state, _ = random_column_state(space, n0, seed)
        quantum = np.array([column_projection(space, s).mean for s in propagate(space, params, state, omega_times)])
        rms = float(np.sqrt(np.mean((quantum / length - reference) ** 2)))
        rows.append(SweepRow(length=length, n0=n0, seed=seed, rms=rms))
    return rows


def sweep_finite_size(
    lengths: Iterable[int],
    seeds: Sequence[int],
    columns: Optional[Dict[int, int]] = None,
    density: float = 0.28,
    window: Tuple[float, float] = (2.0, 6.0),
    samples: int = 81,
    omega: Optional[float] = None,
    max_workers: Optional[int] = None,
    writer: Optional[ArtifactWriter] = None,
) -> SweepSummary:
    """RMS deviation of quantum ⟨x⟩(t) from the Master mean over `window`, per ring length."""
    lengths = list(lengths)
    if not lengths or not seeds:
        raise ValidationError("A sweep needs at least one length and one seed")
    omega = omega or settings.omega
    max_workers = max_workers or settings.max_workers
    starts = {L: (columns or {}).get(L, int(round(density * L))) for L in lengths}

    rows: List[SweepRow] = []
    if max_workers > 1 and len(lengths) > 1:
        with ProcessPoolExecutor(max_workers=max_workers) as executor:
            futures = {
                executor.submit(_sweep_length, L, starts[L], list(seeds), window, samples, omega): L for L in lengths
            }
            for future in as_completed(futures):
                try:
                    rows.extend(future.result())
                except BlockadeError as e:
                    raise ExperimentError(f"Sweep at L={futures[future]} failed: {e}", stage="sweep") from e
    else:
        for L in lengths:
            rows.extend(_sweep_length(L, starts[L], list(seeds), window, samples, omega))
    rows.sort(key=lambda r: (r.length, r.seed))

    rms_by_length = {
        L: float(np.sqrt(np.mean([r.rms ** 2 for r in rows if r.length == L]))) for L in lengths
    }
    summary = SweepSummary(window=list(window), rows=rows, rms_by_length=rms_by_length)
    if writer is not None:
        writer.write_frame("sweep.csv", pd.DataFrame([r.model_dump() for r in rows]))
        writer.write_json("sweep_summary.json", summary)
    logger.info("sweep_complete", lengths=lengths, rms_by_length=rms_by_length)
    return summary
