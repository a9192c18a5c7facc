import json
import logging
import sys

import pytest

from multitile.core.config import get_settings
from multitile.core.logging import JsonFormatter
from multitile.core.workers import WorkerPool, get_pool
from multitile.data.models import RunManifest, TimePoint
from multitile.data.repository import CSVRepository, NullRepository, SQLiteRepository, get_repository
from multitile.services.flow import generate


def _manifest(command="validate schemes/square.json", scheme_hash="abc"):
    return RunManifest(
        command=command,
        scheme_hash=scheme_hash,
        budget=100,
        workers=1,
        precision=50,
        output_hashes={"stdout": "00ff"},
        wall_time=0.25,
    )


def test_settings_from_environment(monkeypatch):
    monkeypatch.setenv("MULTITILE_BUDGET", "1234")
    monkeypatch.setenv("MULTITILE_WORKERS", "3")
    get_settings.cache_clear()
    settings = get_settings()
    assert settings.budget == 1234
    assert settings.workers == 3
    assert get_pool().workers == 3


def test_invalid_storage_is_rejected(monkeypatch):
    monkeypatch.setenv("MULTITILE_STORAGE", "redis")
    get_settings.cache_clear()
    with pytest.raises(ValueError):
        get_settings()


def test_override_keeps_unset_values():
    settings = get_settings()
    changed = settings.override(budget=7, workers=None)
    assert changed.budget == 7
    assert changed.workers == settings.workers
    with pytest.raises(ValueError):
        settings.override(precision=0)


def test_bundled_schemes_listed():
    names = [p.stem for p in get_settings().bundled_schemes()]
    assert names == ["fixed-half", "kakutani-1-3", "square", "triangles"]


def test_sqlite_repository(tmp_path):
    repo = SQLiteRepository(tmp_path / "runs.db")
    repo.save_manifest(_manifest(scheme_hash="abc"))
    repo.save_manifest(_manifest(command="graph", scheme_hash="def"))
    stored = repo.list_manifests()
    assert [m.command for m in stored] == ["graph", "validate schemes/square.json"]
    assert repo.list_manifests(scheme_hash="abc")[0].output_hashes == {"stdout": "00ff"}


def test_csv_repository(tmp_path):
    repo = CSVRepository(tmp_path)
    repo.save_manifest(_manifest())
    repo.save_manifest(_manifest(command="oracle"))
    stored = repo.list_manifests(limit=1)
    assert len(stored) == 1
    assert stored[0].command == "oracle"
    assert stored[0].wall_time == pytest.approx(0.25)


def test_repository_selection(monkeypatch, tmp_path):
    assert isinstance(get_repository(), NullRepository)
    monkeypatch.setenv("MULTITILE_STORAGE", "csv")
    monkeypatch.setenv("MULTITILE_CSV_DIR", str(tmp_path))
    get_settings.cache_clear()
    assert isinstance(get_repository(), CSVRepository)


def test_worker_pool_keeps_order():
    pool = WorkerPool(2, backend="threading")
    assert pool.map(pow, [1, 2, 3, 4], 2) == [1, 4, 9, 16]


def test_json_log_lines_carry_extra_fields():
    record = logging.LogRecord("multitile.test", logging.INFO, __file__, 1, "Patch generated", None, None)
    record.tiles = 17
    payload = json.loads(JsonFormatter().format(record))
    assert payload["message"] == "Patch generated"
    assert payload["level"] == "INFO"
    assert payload["logger"] == "multitile.test"
    assert payload["context"] == {"tiles": 17}
    assert "error" not in payload


def test_json_log_lines_report_errors():
    try:
        raise ValueError("bad scale")
    except ValueError:
        record = logging.LogRecord("multitile.test", logging.ERROR, __file__, 1, "failed", None, sys.exc_info())
    payload = json.loads(JsonFormatter().format(record))
    assert payload["error"]["type"] == "ValueError"
    assert "bad scale" in payload["error"]["trace"]
    assert "context" not in payload


def test_scheme_adapter_tags_records(square, caplog):
    with caplog.at_level(logging.INFO, logger="multitile.services.flow"):
        generate(square, 1, TimePoint.parse("ln(5/3)"))
    record = next(r for r in caplog.records if r.getMessage() == "Patch generated")
    assert record.scheme == square.name
    assert record.dimension == 2
    assert record.tiles == 17
    payload = json.loads(JsonFormatter().format(record))
    assert payload["context"]["scheme"] == square.name
