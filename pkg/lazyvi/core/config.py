from functools import lru_cache
import os
from pathlib import Path
from typing import List, Optional

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_file=".env",
        env_prefix="LAZYVI_",
        case_sensitive=True,
        env_file_encoding="utf-8",
        extra="ignore",
    )

    # App Settings
    APP_NAME: str = "lazyvi"
    APP_VERSION: str = "1.0.0"
    ENVIRONMENT: str = "development"  # development, benchmark

    # Output
    OUTPUT_DIR: str = "results"

    # Logging
    LOG_LEVEL: str = "INFO"  # DEBUG, INFO, WARNING, ERROR, CRITICAL
    LOG_FILE: Optional[str] = None

    # Execution
    MAX_WORKERS: int = 1  # >1 runs variables in parallel threads

    # Inference defaults
    DEFAULT_ALPHA: float = 0.05
    DEFAULT_CV_FOLDS: int = 5
    DEFAULT_LAMBDA_MULTIPLIERS: List[float] = [0.01, 0.1, 1.0, 10.0, 100.0]
    LAMBDA_REFERENCE_N: int = 1000  # grid is scaled by sqrt(n1 / LAMBDA_REFERENCE_N)

    # Training defaults
    DEFAULT_EPOCHS: int = 500
    DEFAULT_LEARNING_RATE: float = 1e-2
    DEFAULT_MOMENTUM: float = 0.9

    # Shapley
    SHAPLEY_LAMBDA: float = 50.0
    SHAPLEY_MAX_EXACT_FEATURES: int = 12

    # Gradient feature cache (n1 * M doubles per cached variable)
    FEATURE_CACHE_MAX_BYTES: int = 512 * 1024 * 1024

    @property
    def is_benchmark(self) -> bool:
        """Check if running timing benchmarks"""
        return self.ENVIRONMENT == "benchmark"

    @property
    def output_path(self) -> Path:
        return Path(self.OUTPUT_DIR)

    def validate_run_environment(self) -> List[str]:
        """Validate runtime configuration and return warnings"""
        warnings = []

        if self.MAX_WORKERS < 1:
            warnings.append("MAX_WORKERS < 1 is treated as 1")

        if self.MAX_WORKERS > 1 and self.is_benchmark:
            warnings.append(
                "MAX_WORKERS > 1 distorts per-method wall-clock comparisons"
            )

        output = self.output_path
        parent = output if output.exists() else output.parent
        if str(parent) and parent.exists() and not os.access(parent, os.W_OK):
            warnings.append(f"OUTPUT_DIR {output} is not writable")

        if self.LOG_LEVEL.upper() not in (
            "DEBUG",
            "INFO",
            "WARNING",
            "ERROR",
            "CRITICAL",
        ):
            warnings.append(f"Unknown LOG_LEVEL {self.LOG_LEVEL}, using INFO")

        return warnings


@lru_cache()
def get_settings() -> Settings:
    """Get cached settings instance"""
    return Settings()


settings = get_settings()
