import os
from dataclasses import dataclass, field, replace
from functools import lru_cache
from pathlib import Path
from typing import List

from dotenv import load_dotenv

load_dotenv()

STORAGE_BACKENDS = {"sqlite", "csv", "none"}


def _env(name: str, default: str) -> str:
    return os.getenv(name, default)


def _int(name: str, default: int) -> int:
    return int(_env(name, str(default)))


@dataclass(frozen=True)
class Settings:
    budget: int = field(default_factory=lambda: _int("MULTITILE_BUDGET", 10_000_000))
    workers: int = field(default_factory=lambda: _int("MULTITILE_WORKERS", 1))
    backend: str = field(default_factory=lambda: _env("MULTITILE_BACKEND", "loky"))
    precision: int = field(default_factory=lambda: _int("MULTITILE_PRECISION", 50))
    state_budget: int = field(default_factory=lambda: _int("MULTITILE_STATE_BUDGET", 1_000_000))
    cycle_budget: int = field(default_factory=lambda: _int("MULTITILE_CYCLE_BUDGET", 100_000))
    storage: str = field(default_factory=lambda: _env("MULTITILE_STORAGE", "sqlite"))
    db_path: Path = field(default_factory=lambda: Path(_env("MULTITILE_DB_PATH", "data/runs.db")))
    csv_dir: Path = field(default_factory=lambda: Path(_env("MULTITILE_CSV_DIR", "data")))
    schemes_dir: Path = field(default_factory=lambda: Path(_env("MULTITILE_SCHEMES_DIR", "schemes")))
    log_level: str = field(default_factory=lambda: _env("MULTITILE_LOG_LEVEL", "INFO"))

    def bundled_schemes(self) -> List[Path]:
        if not self.schemes_dir.exists():
            raise FileNotFoundError(f"Schemes directory not found: {self.schemes_dir}")
        return sorted(self.schemes_dir.glob("*.json"))

    def override(self, **changes) -> "Settings":
        """Copy with the non-None values of ``changes`` applied."""
        updated = replace(self, **{k: v for k, v in changes.items() if v is not None})
        _check(updated)
        return updated


def _check(settings: Settings) -> None:
    if settings.storage not in STORAGE_BACKENDS:
        raise ValueError("MULTITILE_STORAGE must be one of 'sqlite', 'csv' or 'none'")
    if settings.budget < 1:
        raise ValueError("MULTITILE_BUDGET must be positive")
    if settings.workers < 1:
        raise ValueError("MULTITILE_WORKERS must be positive")
    if settings.precision < 1:
        raise ValueError("MULTITILE_PRECISION must be positive")


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    settings = Settings()
    _check(settings)
    return settings
