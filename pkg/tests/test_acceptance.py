import pytest

from blockade.services.validation_service import ValidationSuite


@pytest.mark.slow
@pytest.mark.parametrize(
    "key",
    [
        "quantum_vs_master",
        "thermalization",
        "finite_size",
        "continuum_limit",
        "gaussian_relaxation",
        "census",
        "torus",
    ],
)
def test_full_criterion(key):
    (result,) = ValidationSuite().run([key]).results
    assert result.error is None
    assert result.passed, result.measured
