from fractions import Fraction

import numpy as np
import pytest

from blockade.models.kinetics_models import ExcitationDistribution
from blockade.services.dimer_service import transition_coefficients
from blockade.services.master_service import build_rates_1d, equilibrium_closed_form, solve_master
from blockade.services.validation_service import ValidationSuite, validate_all
from blockade.utils.exceptions import ValidationError


def _inflated_forward_rates(length):
    counts = transition_coefficients(length)
    return counts.model_copy(update={"t_up": [v * Fraction(11, 10) for v in counts.t_up]})


def test_fast_mode_selection():
    suite = ValidationSuite(fast=True)
    assert suite.selected() == [
        "combinatorics",
        "detailed_balance",
        "normalization",
        "continuum_limit",
        "transform_constants",
        "gaussian_relaxation",
        "census",
        "dense_oracle",
    ]
    assert len(ValidationSuite().selected()) == 12


def test_cheap_criteria_pass():
    keys = ["combinatorics", "detailed_balance", "normalization", "transform_constants", "dense_oracle"]
    summary = ValidationSuite(fast=True).run(keys)
    assert [r.key for r in summary.results] == keys
    assert all(r.mode == "fast" for r in summary.results)
    assert summary.passed, [r for r in summary.results if not r.passed]


def test_corrupted_coefficients_fail_detailed_balance():
    suite = ValidationSuite(fast=True, coefficients=_inflated_forward_rates)
    summary = suite.run(["detailed_balance", "combinatorics"])
    assert not summary.passed
    balance, combinatorics = summary.results
    assert not balance.passed
    assert balance.measured["failing_lengths"] == list(range(3, 13))
    assert not combinatorics.passed


def test_errors_are_recorded_not_raised():
    def missing_table(length):
        raise RuntimeError(f"no table for L={length}")

    summary = ValidationSuite(fast=True, coefficients=missing_table).run(["detailed_balance"])
    (result,) = summary.results
    assert not result.passed
    assert "no table" in result.error


def test_unknown_criterion():
    with pytest.raises(ValidationError):
        ValidationSuite().run(["bogus"])


def test_validate_all_fast(mocker):
    run = mocker.patch.object(ValidationSuite, "run", autospec=True)
    validate_all(fast=True)
    (suite,), _ = run.call_args
    assert suite.fast


NEEL_FRAGMENT = "1010101010101" + "0" * 12


@pytest.fixture(scope="module")
def ring25_master():
    rates = build_rates_1d(25)
    p0 = np.zeros(rates.n_max + 1)
    p0[7] = 1.0
    omega_times = np.round(np.arange(0, 61) * 0.05, 10)
    trajectory = solve_master(rates, ExcitationDistribution(p=p0), omega_times)
    return {float(t): d for t, d in zip(omega_times, trajectory)}


def _quantum_following_master(mocker, master, deviate_after):
    def fake_propagate(space, params, state, omega_times):
        return list(omega_times)

    def fake_projection(space, omega_t):
        reference = master[float(omega_t)]
        if float(omega_t) > deviate_after:
            return ExcitationDistribution(p=np.eye(reference.p.size)[0])
        return reference

    mocker.patch("blockade.services.validation_service.propagate", side_effect=fake_propagate)
    mocker.patch("blockade.services.validation_service.column_projection", side_effect=fake_projection)


def test_quantum_vs_master_gates_on_short_window(mocker, ring25_master):
    _quantum_following_master(mocker, ring25_master, deviate_after=1.5)
    (result,) = ValidationSuite().run(["quantum_vs_master"]).results
    assert result.passed
    assert result.measured["max_tv_short"] == pytest.approx(0.0, abs=1e-12)
    assert result.measured["max_tv_full"] > 0.5
    starts = result.measured["starts"]
    assert [s["seed"] for s in starts] == [1, 2, 3]
    assert all(s["bits"].count("1") == 7 and s["bits"] != NEEL_FRAGMENT for s in starts)


def test_quantum_vs_master_fails_on_early_disagreement(mocker, ring25_master):
    _quantum_following_master(mocker, ring25_master, deviate_after=1.0)
    (result,) = ValidationSuite().run(["quantum_vs_master"]).results
    assert not result.passed
    assert result.measured["max_tv_short"] > 0.5


def test_thermalization_averages_random_column_starts(mocker):
    equilibrium = equilibrium_closed_form(25).normalized
    averaged = mocker.patch(
        "blockade.services.validation_service.time_averaged_distribution", return_value=equilibrium
    )
    (result,) = ValidationSuite().run(["thermalization"]).results
    assert result.passed
    assert result.measured["tv"] == pytest.approx(0.0, abs=1e-12)
    assert [s["seed"] for s in result.measured["starts"]] == [1, 2]
    assert all(s["bits"] != NEEL_FRAGMENT for s in result.measured["starts"])
    assert all(call.args[3:] == ((2.0, 10.0), 81) for call in averaged.call_args_list)
