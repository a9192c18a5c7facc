from __future__ import annotations

import json
import logging
import sqlite3
from dataclasses import asdict
from pathlib import Path
from typing import List, Optional

import pandas as pd

from ..core.config import get_settings
from .models import RunManifest

logger = logging.getLogger(__name__)

MANIFEST_COLUMNS = [
    "created_at",
    "command",
    "scheme_hash",
    "budget",
    "workers",
    "precision",
    "output_hashes",
    "wall_time",
]


def _record(manifest: RunManifest) -> dict:
    record = asdict(manifest)
    record["output_hashes"] = json.dumps(manifest.output_hashes, sort_keys=True)
    return record


def _manifest(record: dict) -> RunManifest:
    return RunManifest(
        command=record["command"],
        scheme_hash=record["scheme_hash"] or "",
        budget=int(record["budget"]),
        workers=int(record["workers"]),
        precision=int(record["precision"]),
        output_hashes=json.loads(record["output_hashes"]),
        wall_time=float(record["wall_time"]),
        created_at=record["created_at"],
    )


class BaseRepository:
    def save_manifest(self, manifest: RunManifest) -> None:  # pragma: no cover - interface
        raise NotImplementedError

    def list_manifests(self, scheme_hash: Optional[str] = None, limit: int = 50) -> List[RunManifest]:  # pragma: no cover - interface
        raise NotImplementedError


class NullRepository(BaseRepository):
    def save_manifest(self, manifest: RunManifest) -> None:
        return None

    def list_manifests(self, scheme_hash: Optional[str] = None, limit: int = 50) -> List[RunManifest]:
        return []


class SQLiteRepository(BaseRepository):
    def __init__(self, db_path: Path) -> None:
        db_path.parent.mkdir(parents=True, exist_ok=True)
        self.conn = sqlite3.connect(db_path, check_same_thread=False)
        self.conn.row_factory = sqlite3.Row
        schema_path = Path(__file__).parent / "schema.sql"
        with schema_path.open("r", encoding="utf-8") as f:
            self.conn.executescript(f.read())
        self.conn.commit()

    def save_manifest(self, manifest: RunManifest) -> None:
        record = _record(manifest)
        with self.conn:
            self.conn.execute(
                """
                INSERT INTO runs(created_at, command, scheme_hash, budget, workers, precision, output_hashes, wall_time)
                VALUES(:created_at, :command, :scheme_hash, :budget, :workers, :precision, :output_hashes, :wall_time)
                """,
                record,
            )
        logger.debug("Manifest stored", extra={"command": manifest.command, "backend": "sqlite"})

    def list_manifests(self, scheme_hash: Optional[str] = None, limit: int = 50) -> List[RunManifest]:
        rows = self.conn.execute(
            """
            SELECT * FROM runs
            WHERE (:scheme_hash IS NULL OR scheme_hash = :scheme_hash)
            ORDER BY id DESC
            LIMIT :limit
            """,
            {"scheme_hash": scheme_hash, "limit": limit},
        ).fetchall()
        return [_manifest(dict(row)) for row in rows]


class CSVRepository(BaseRepository):
    def __init__(self, directory: Path) -> None:
        self.dir = directory
        self.dir.mkdir(parents=True, exist_ok=True)
        self.runs_path = self.dir / "runs.csv"

    def _load_df(self) -> pd.DataFrame:
        if not self.runs_path.exists():
            return pd.DataFrame(columns=MANIFEST_COLUMNS)
        return pd.read_csv(self.runs_path, dtype={"scheme_hash": str}, keep_default_na=False)

    def save_manifest(self, manifest: RunManifest) -> None:
        df_new = pd.DataFrame([_record(manifest)], columns=MANIFEST_COLUMNS)
        df = self._load_df()
        combined = df_new if df.empty else pd.concat([df, df_new], ignore_index=True)
        combined.to_csv(self.runs_path, index=False)
        logger.debug("Manifest stored", extra={"command": manifest.command, "backend": "csv"})

    def list_manifests(self, scheme_hash: Optional[str] = None, limit: int = 50) -> List[RunManifest]:
        df = self._load_df()
        if scheme_hash is not None:
            df = df[df["scheme_hash"] == scheme_hash]
        df = df.iloc[::-1].head(limit)
        return [_manifest(record) for record in df.to_dict(orient="records")]


def get_repository() -> BaseRepository:
    settings = get_settings()
    if settings.storage == "sqlite":
        return SQLiteRepository(settings.db_path)
    if settings.storage == "csv":
        return CSVRepository(settings.csv_dir)
    return NullRepository()
