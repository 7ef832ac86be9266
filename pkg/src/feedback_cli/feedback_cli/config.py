"""Runtime settings loaded from environment variables."""

from pathlib import Path

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Defaults for the CLI, read from FEEDBACK_* variables or a .env file."""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        env_prefix="FEEDBACK_",
        extra="ignore",
    )

    output_dir: Path = Path("runs")
    log_level: str = "INFO"
    jobs: int = Field(default=1, ge=1)


def get_settings() -> Settings:
    """Build settings from the current environment."""
    return Settings()
