import json

import numpy as np
import pytest

from blockade.models.experiment_models import ExperimentConfig, InitialStateSpec, SolverKind, TimeGrid
from blockade.models.kinetics_models import ExcitationDistribution
from blockade.models.lattice_models import Lattice
from blockade.services.experiment_service import (
    compare_distributions,
    config_digest,
    package_versions,
    run_experiment,
    sweep_finite_size,
)
from blockade.utils.exceptions import ExperimentError, ValidationError


def _config(tmp_path, **overrides):
    values = dict(
        name="ring8",
        lattice=Lattice.ring(8),
        initial=InitialStateSpec(bits="10000000"),
        time_grid=TimeGrid(stop=1.0, samples=5),
        output_dir=str(tmp_path),
    )
    values.update(overrides)
    return ExperimentConfig(**values)


def test_run_all_solvers(tmp_path):
    config = _config(tmp_path, solvers=[SolverKind.QUANTUM, SolverKind.MASTER, SolverKind.FPE])
    report = run_experiment(config)

    assert report.state_count == 47
    assert report.initial_states == ["10000000"]
    assert [(r.label_a, r.label_b) for r in report.comparisons] == [
        ("quantum", "master"),
        ("quantum", "fpe"),
        ("master", "fpe"),
    ]
    assert report.comparison("quantum", "master").tv[0] == pytest.approx(0.0, abs=1e-12)
    assert set(report.wall_times) == {"enumerate", "initial", "quantum", "master", "fpe", "compare"}
    for name in ("space.json", "quantum.csv", "rates.json", "master.csv", "fpe_field.csv",
                 "fpe_density.csv", "fpe.csv", "report.json", "manifest.json"):
        assert (tmp_path / name).exists(), name
    with pytest.raises(KeyError):
        report.comparison("fpe", "quantum")


def test_seeded_random_initial_states(tmp_path):
    config = _config(tmp_path, initial=InitialStateSpec(column=2, seed=5, count=3))
    report = run_experiment(config)

    assert [r.label_a for r in report.comparisons] == ["quantum_seed5", "quantum_seed6", "quantum_seed7"]
    assert all(bits.count("1") == 2 for bits in report.initial_states)
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["seeds"] == [5, 6, 7]
    assert manifest["config_sha256"] == config_digest(config)
    assert manifest["state_count"] == 47
    assert len(manifest["omega_t"]) == 5

    again = run_experiment(_config(tmp_path / "again", initial=InitialStateSpec(column=2, seed=5, count=3)))
    assert again.initial_states == report.initial_states


def test_stage_failure_names_the_stage(tmp_path, mocker):
    mocker.patch(
        "blockade.services.experiment_service.solve_master", side_effect=RuntimeError("generator blew up")
    )
    with pytest.raises(ExperimentError) as info:
        run_experiment(_config(tmp_path))
    assert info.value.stage == "master"
    assert "generator blew up" in str(info.value)


def test_blockaded_initial_state_fails_in_initial_stage(tmp_path):
    with pytest.raises(ExperimentError) as info:
        run_experiment(_config(tmp_path, initial=InitialStateSpec(bits="11000000")))
    assert info.value.stage == "initial"


def test_torus_experiment(tmp_path):
    config = _config(
        tmp_path,
        lattice=Lattice.torus(3, 3),
        initial=InitialStateSpec(column=1, seed=0),
        time_grid=TimeGrid(stop=0.3, samples=3),
    )
    report = run_experiment(config)
    assert report.state_count == 34
    assert report.comparison("quantum", "master").max_tv < 0.3


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(
            lattice=Lattice.torus(3, 3),
            initial=InitialStateSpec(column=1, seed=0),
            time_grid=TimeGrid(stop=1.0, samples=3),
            solvers=[SolverKind.FPE],
        )
    with pytest.raises(ValueError):
        InitialStateSpec(column=2)
    with pytest.raises(ValueError):
        TimeGrid(start=2.0, stop=1.0, samples=3)


def test_config_digest(tmp_path):
    assert config_digest(_config(tmp_path)) == config_digest(_config(tmp_path))
    assert config_digest(_config(tmp_path)) != config_digest(_config(tmp_path, name="other"))


def test_package_versions():
    versions = package_versions()
    assert {"blockade", "numpy", "scipy", "pandas", "pydantic", "python"} <= set(versions)


def test_compare_distributions():
    a = [ExcitationDistribution(p=[1.0, 0.0], omega_t=0.0), ExcitationDistribution(p=[0.5, 0.5], omega_t=1.0)]
    b = [ExcitationDistribution(p=[1.0, 0.0], omega_t=0.0), ExcitationDistribution(p=[0.75, 0.25], omega_t=1.0)]
    report = compare_distributions("a", a, "b", b, equilibrium=ExcitationDistribution(p=[0.5, 0.5]))
    assert report.tv == [0.0, 0.25]
    assert report.ks == [0.0, 0.25]
    assert report.max_tv == 0.25
    assert report.equilibrium_tv == 0.0
    with pytest.raises(ValidationError):
        compare_distributions("a", a, "b", b[:1])
    shifted = [ExcitationDistribution(p=d.p, omega_t=d.omega_t + 0.1) for d in b]
    with pytest.raises(ValidationError):
        compare_distributions("a", a, "b", shifted)


def test_sweep_finite_size(writer):
    summary = sweep_finite_size([8, 10], seeds=[0, 1], window=(0.5, 1.0), samples=5, writer=writer)
    assert [(r.length, r.seed) for r in summary.rows] == [(8, 0), (8, 1), (10, 0), (10, 1)]
    assert [r.n0 for r in summary.rows] == [2, 2, 3, 3]
    assert set(summary.rms_by_length) == {8, 10}
    assert all(np.isfinite(v) for v in summary.rms_by_length.values())
    assert (writer.output_path / "sweep.csv").exists()
    assert (writer.output_path / "sweep_summary.json").exists()


def test_sweep_needs_seeds():
    with pytest.raises(ValidationError):
        sweep_finite_size([8], seeds=[])
