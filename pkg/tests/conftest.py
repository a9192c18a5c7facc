from pathlib import Path

import pytest

from multitile.core.config import get_settings
from multitile.services.scheme import load_scheme

SCHEMES_DIR = Path(__file__).resolve().parent.parent / "schemes"


@pytest.fixture(autouse=True)
def isolated_settings(monkeypatch):
    monkeypatch.setenv("MULTITILE_STORAGE", "none")
    monkeypatch.setenv("MULTITILE_SCHEMES_DIR", str(SCHEMES_DIR))
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture()
def schemes_dir():
    return SCHEMES_DIR


@pytest.fixture()
def square():
    return load_scheme(SCHEMES_DIR / "square.json")


@pytest.fixture()
def triangles():
    return load_scheme(SCHEMES_DIR / "triangles.json")


@pytest.fixture()
def kakutani():
    return load_scheme(SCHEMES_DIR / "kakutani-1-3.json")


@pytest.fixture()
def fixed_half():
    return load_scheme(SCHEMES_DIR / "fixed-half.json")
