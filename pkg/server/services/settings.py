"""
Process-level settings read from the environment (prefix ``SOCIALTTT_``)
and an optional ``.env`` file.
"""

from functools import lru_cache
from pathlib import Path
from typing import Optional

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    output_dir: Path = Path("runs")
    fixture_path: Optional[Path] = None
    log_level: str = "INFO"
    workers: int = 1

    model_config = SettingsConfigDict(env_prefix="SOCIALTTT_", env_file=".env", extra="ignore")

    @property
    def resolved_fixture_path(self) -> Path:
        return self.fixture_path or self.output_dir / "test_boards.json"


@lru_cache
def get_settings() -> Settings:
    """Process-wide settings, read once."""
    return Settings()
