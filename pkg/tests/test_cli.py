import json

import pytest

from blockade.main import EXIT_CRITERION_FAILED, EXIT_ERROR, EXIT_OK, main


def test_enumerate(tmp_path, capsys):
    assert main(["enumerate", "--ring", "8", "--export", "--output-dir", str(tmp_path)]) == EXIT_OK
    summary = json.loads(capsys.readouterr().out)
    assert summary["state_count"] == 47
    assert summary["column_sizes"] == [1, 8, 20, 16, 2]
    assert (tmp_path / "ring-8_edges.txt").exists()
    assert (tmp_path / "ring-8_summary.json").exists()


def test_enumerate_needs_a_lattice(tmp_path):
    assert main(["enumerate", "--output-dir", str(tmp_path)]) == EXIT_ERROR


def test_coeffs_to_stdout(capsys):
    assert main(["coeffs", "--length", "8"]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "L,n,nu_n,c_down,T_down,T_up"
    assert lines[2] == "8,1,8,8,1,5"


def test_coeffs_to_file(tmp_path):
    target = tmp_path / "coeffs.csv"
    assert main(["coeffs", "--length", "10", "--output", str(target)]) == EXIT_OK
    assert len(target.read_text().splitlines()) == 7


def test_master(tmp_path, capsys):
    args = ["master", "--ring", "8", "--n0", "1", "--stop", "1", "--samples", "3", "--output-dir", str(tmp_path)]
    assert main(args) == EXIT_OK
    assert (tmp_path / "master.csv").exists()
    assert (tmp_path / "rates.json").exists()
    assert "final_mean" in json.loads(capsys.readouterr().out)


def test_master_rejects_column_out_of_range(tmp_path):
    assert main(["master", "--ring", "8", "--n0", "9", "--output-dir", str(tmp_path)]) == EXIT_ERROR


def test_fpe(tmp_path):
    args = ["fpe", "--length", "20", "--n0", "5", "--cells", "80", "--stop", "1", "--samples", "3",
            "--output-dir", str(tmp_path)]
    assert main(args) == EXIT_OK
    for name in ("fpe_field.csv", "fpe_density.csv", "fpe.csv"):
        assert (tmp_path / name).exists()


def test_quantum_on_torus(tmp_path):
    args = ["quantum", "--torus", "2", "2", "--column", "1", "--seed", "3", "--stop", "1", "--samples", "3",
            "--output-dir", str(tmp_path)]
    assert main(args) == EXIT_OK
    assert (tmp_path / "quantum.csv").exists()
    assert (tmp_path / "manifest.json").exists()


def test_compare(tmp_path, capsys):
    args = ["compare", "--ring", "8", "--bits", "10000000", "--stop", "1", "--samples", "3",
            "--output-dir", str(tmp_path)]
    assert main(args) == EXIT_OK
    (comparison,) = json.loads(capsys.readouterr().out)
    assert (comparison["a"], comparison["b"]) == ("quantum", "master")


def test_compare_from_config_file(tmp_path):
    config = {
        "name": "from-file",
        "lattice": {"kind": "ring", "extents": [8]},
        "initial": {"column": 2, "seed": 1},
        "time_grid": {"stop": 1.0, "samples": 3},
        "solvers": ["master", "fpe"],
        "output_dir": str(tmp_path / "run"),
    }
    path = tmp_path / "config.json"
    path.write_text(json.dumps(config))
    assert main(["compare", "--config", str(path)]) == EXIT_OK
    assert (tmp_path / "run" / "fpe.csv").exists()


def test_invalid_time_grid(tmp_path):
    args = ["quantum", "--ring", "8", "--bits", "10000000", "--start", "2", "--stop", "1",
            "--output-dir", str(tmp_path)]
    assert main(args) == EXIT_ERROR


def test_sweep(tmp_path):
    args = ["sweep", "--lengths", "8", "10", "--seeds", "2", "--window", "0.5", "1.0", "--samples", "5",
            "--output-dir", str(tmp_path)]
    assert main(args) == EXIT_OK
    assert (tmp_path / "sweep.csv").exists()
    assert main(["sweep", "--lengths", "8", "10", "--columns", "2", "--output-dir", str(tmp_path)]) == EXIT_ERROR


def test_validate_fast_subset(tmp_path, capsys):
    args = ["validate", "--fast", "--only", "combinatorics", "normalization", "--output-dir", str(tmp_path)]
    assert main(args) == EXIT_OK
    out = capsys.readouterr().out
    assert "PASS  [fast] combinatorics" in out
    report = json.loads((tmp_path / "validation.json").read_text())
    assert report["mode"] == "fast"
    assert [r["key"] for r in report["results"]] == ["combinatorics", "normalization"]


def test_validate_failure_exit_code(tmp_path, mocker):
    mocker.patch(
        "blockade.services.validation_service.ValidationSuite.check_normalization",
        autospec=True,
        return_value=(False, {"forced": True}),
    )
    args = ["validate", "--only", "normalization", "--output-dir", str(tmp_path)]
    assert main(args) == EXIT_CRITERION_FAILED


def test_validate_unknown_criterion(tmp_path):
    assert main(["validate", "--only", "bogus", "--output-dir", str(tmp_path)]) == EXIT_ERROR


def test_version(capsys):
    with pytest.raises(SystemExit) as info:
        main(["--version"])
    assert info.value.code == 0
    assert "blockade" in capsys.readouterr().out
