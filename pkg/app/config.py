"""
Configuration module for the Wigner flow toolkit.
"""
from typing import Optional
from functools import lru_cache

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Toolkit settings loaded from environment variables (prefix WIGNER_FLOW_)."""

    model_config = SettingsConfigDict(
        env_prefix="WIGNER_FLOW_",
        env_file=".env",
        case_sensitive=False,
        extra="ignore",
    )

    # Application
    app_name: str = "Wigner Flow"
    log_level: str = "INFO"

    # Grids
    grid_points: int = Field(default=201, ge=8)
    quadrature_points: int = Field(default=401, ge=8)
    check_grid_points: int = Field(default=401, ge=8)

    # Series truncation
    eta_max: int = Field(default=25, ge=0, le=31)
    series_tol: float = Field(default=1e-12, ge=0.0)

    # Velocity guards
    w_floor_rel: float = Field(default=1e-12, gt=0.0)
    gaussian_tail_exponent: float = Field(default=600.0, gt=0.0)

    # Loop integrals
    loop_samples: int = Field(default=32, ge=2)

    # Classical orbits
    orbit_steps_per_period: int = Field(default=2000, ge=100)
    orbit_max_periods: int = Field(default=20, ge=1)

    # Parallelism (WIGNER_FLOW_THREADS)
    threads: Optional[int] = Field(default=None, ge=1)


@lru_cache()
def get_settings() -> Settings:
    """Get cached settings instance."""
    return Settings()
