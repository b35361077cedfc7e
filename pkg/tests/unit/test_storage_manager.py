"""Unit tests for the series cache and report storage."""

from __future__ import annotations

import json
from pathlib import Path

import pytest
from lib.series_core import QSeries
from lib.storage_manager import StorageManager

# %% --------------------------------------------
# * Fixtures


class CountingGenerator:
    """Generator of 1/(1 - X) recording the requested orders."""

    def __init__(self) -> None:
        self.calls: list[int] = []

    def __call__(self, order: int) -> QSeries:
        self.calls.append(order)
        return QSeries.from_coeffs([1] * (order + 1), order)


@pytest.fixture
def storage(tmp_path: Path) -> StorageManager:
    return StorageManager(str(tmp_path / "cache"), str(tmp_path / "exports"))


# %% --------------------------------------------
# * Series cache


def test_cache_miss_then_hit(storage: StorageManager) -> None:
    generator = CountingGenerator()
    first = storage.get_or_generate("F", 20, generator)
    second = storage.get_or_generate("F", 20, generator)

    assert generator.calls == [20]
    assert first == second
    assert storage.cache_path("F", 20).exists()


def test_higher_order_cache_is_truncated(storage: StorageManager) -> None:
    generator = CountingGenerator()
    storage.get_or_generate("theta", 30, generator)
    shorter = storage.get_or_generate("theta", 10, generator)

    assert generator.calls == [30]
    assert shorter.order == 10
    assert shorter.coefficients() == [1] * 11


def test_lower_order_cache_is_not_used(storage: StorageManager) -> None:
    generator = CountingGenerator()
    storage.get_or_generate("alpha", 10, generator)
    storage.get_or_generate("alpha", 15, generator)
    assert generator.calls == [10, 15]


def test_cache_names_do_not_collide(storage: StorageManager) -> None:
    generator = CountingGenerator()
    storage.get_or_generate("a4_tate", 10, generator)
    assert storage.load_series("a4", 10) is None
    assert storage.cache_stem("a4_tate", 10) == "a4-tate-order-10"


def test_unreadable_cache_file_is_ignored(storage: StorageManager) -> None:
    path = storage.cache_path("G", 12)
    path.write_text("not a series\n", encoding="utf-8")
    assert storage.load_series("G", 12) is None


def test_cache_disabled(tmp_path: Path) -> None:
    storage = StorageManager()
    generator = CountingGenerator()
    storage.get_or_generate("F", 5, generator)
    storage.get_or_generate("F", 5, generator)

    assert storage.cache_path("F", 5) is None
    assert not storage.store_series("F", QSeries.one(5))
    assert generator.calls == [5, 5]
    assert not list(tmp_path.iterdir())


def test_from_env(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setenv("GFLAB_CACHE_DIR", str(tmp_path / "env-cache"))
    storage = StorageManager.from_env()
    assert storage.cache_dir == tmp_path / "env-cache"
    assert storage.cache_dir.is_dir()

    monkeypatch.delenv("GFLAB_CACHE_DIR")
    assert StorageManager.from_env().cache_dir is None


# %% --------------------------------------------
# * Reports


def test_store_report(storage: StorageManager, tmp_path: Path) -> None:
    report = {"suite": "heights", "passed": True, "checks": []}
    out_path = tmp_path / "out" / "report.json"

    assert storage.store_report(report, out_path, "heights")
    assert json.loads(out_path.read_text(encoding="utf-8")) == report
    exported = list((tmp_path / "exports").glob("*_heights.json"))
    assert len(exported) == 1


def test_store_report_failure(storage: StorageManager, tmp_path: Path) -> None:
    blocker = tmp_path / "blocker"
    blocker.write_text("", encoding="utf-8")
    assert not storage.store_report({}, blocker / "report.json")
