"""Application configuration settings."""
import os
from functools import lru_cache
from typing import List, Optional

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Application settings loaded from environment variables (prefix ``GAPSCOPE_``)."""

    model_config = SettingsConfigDict(
        env_prefix="GAPSCOPE_",
        env_file=".env",
        case_sensitive=False,
        extra="ignore",
    )

    # Worker pool
    threads: int = 0  # 0 = one worker per CPU, 1 = serial

    # Logging
    log_level: str = "INFO"
    log_dir: Optional[str] = None  # file logging only when set

    # Eigensolver
    default_rel_tol: float = 1e-14  # bisection tolerance relative to max row sum
    max_inverse_sweeps: int = 10

    # Dense oracle
    jacobi_max_sweeps: int = 30
    jacobi_rel_threshold: float = 1e-13
    oracle_max_size: int = 1000

    # Verification suite
    verify_seed: int = 20240917
    verify_oracle_instances: int = 200
    verify_oracle_max_k: int = 100
    verify_ground_state_instances: int = 100
    verify_ground_state_max_k: int = 200
    verify_k_grid: List[int] = [100, 200, 400, 800, 1600, 3200, 6400, 10000]

    def worker_count(self) -> int:
        """Resolve the configured worker cap."""
        if self.threads <= 0:
            return os.cpu_count() or 1
        return self.threads


@lru_cache()
def get_settings() -> Settings:
    """Get cached settings instance."""
    return Settings()
