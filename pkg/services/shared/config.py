"""Shared configuration management for the feature-selection toolkit.

Based on Pydantic Settings v2 best practices:
https://docs.pydantic.dev/latest/concepts/pydantic_settings/
"""

from pathlib import Path
from typing import Literal

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Process-level settings with environment variable support.

    All settings can be overridden via environment variables with the prefix 'FSQX_'.
    Example: FSQX_LOG_LEVEL=debug

    Engine hyperparameters are not settings; they live in the experiment
    config file (see pipeline.eval.eval.ExperimentConfig).
    """

    model_config = SettingsConfigDict(
        env_prefix="FSQX_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    log_level: Literal["DEBUG", "INFO", "WARNING", "ERROR"] = Field(
        default="INFO",
        description="Logging level",
    )

    # Identification stamped into report metadata
    service_name: str = Field(
        default="qx-feature-selection",
        description="Tool identifier for reports and metrics",
    )
    service_version: str = Field(
        default="0.1.0",
        description="Tool version",
    )

    # Output
    output_dir: Path = Field(
        default=Path("results"),
        description="Default directory for run reports and curve files",
    )
    metrics_file: Path | None = Field(
        default=None,
        description="Write Prometheus counters here (text format) after each CLI command",
    )

    # Data ingestion
    csv_delimiter: str = Field(
        default=",",
        min_length=1,
        max_length=1,
        description="Field delimiter for dataset files",
    )

    # Evaluation
    cache_evaluations: bool = Field(
        default=True,
        description="Memoize fitness per feature mask within one evaluator (saves retraining)",
    )


def get_settings() -> Settings:
    """Factory function to get settings instance.

    Returns:
        Configured Settings instance
    """
    return Settings()
