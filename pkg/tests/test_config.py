import pytest
from pydantic import ValidationError

from blockade.config import Settings


def test_defaults():
    config = Settings(_env_file=None)
    assert config.omega == 1.0
    assert config.jacobian_convention == "scaled"
    assert config.float_digits == 15


def test_environment_override(monkeypatch):
    monkeypatch.setenv("BLOCKADE_KRYLOV_DIM", "30")
    monkeypatch.setenv("BLOCKADE_OUTPUT_DIR", "/tmp/blockade-runs")
    config = Settings(_env_file=None)
    assert config.krylov_dim == 30
    assert config.output_dir == "/tmp/blockade-runs"


def test_rejects_invalid_values(monkeypatch):
    monkeypatch.setenv("BLOCKADE_OMEGA", "-1")
    with pytest.raises(ValidationError):
        Settings(_env_file=None)
