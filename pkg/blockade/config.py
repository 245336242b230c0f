from typing import Optional

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Simulator configuration settings"""

    model_config = SettingsConfigDict(
        env_prefix="BLOCKADE_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # Application
    app_name: str = "blockade-relaxation"
    app_version: str = "1.0.0"
    debug: bool = False

    # Model
    omega: float = Field(default=1.0, gt=0)

    # Enumeration
    max_states: int = Field(default=5_000_000, ge=1)

    # Quantum propagation
    propagation_tolerance: float = Field(default=1e-8, gt=0)
    norm_tolerance: float = Field(default=1e-9, gt=0)
    krylov_dim: int = Field(default=20, ge=2)
    initial_step: float = Field(default=0.25, gt=0)
    max_propagation_steps: int = Field(default=20_000, ge=1)
    dense_oracle_max_states: int = Field(default=4096, ge=1)

    # Fokker-Planck
    fpe_cells: int = Field(default=512, ge=8)
    fpe_mass_tolerance: float = Field(default=1e-8, gt=0)
    quadrature_tolerance: float = Field(default=1e-9, gt=0)
    jacobian_convention: str = "scaled"

    # Output
    output_dir: str = "./runs"
    float_digits: int = Field(default=15, ge=6, le=17)

    # Performance
    max_workers: int = Field(default=1, ge=1)

    # Monitoring
    log_level: str = "INFO"
    log_file: Optional[str] = None
    log_json: bool = False


settings = Settings()
