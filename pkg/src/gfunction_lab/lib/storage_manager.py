"""Module to handle the series cache and report files on the file system."""

# * Creation : Oct 2026
# * License: MIT license

from __future__ import annotations

import json
import logging
import os
import re
import tempfile
import threading
from collections.abc import Callable
from datetime import UTC, datetime
from pathlib import Path
from typing import Any

from slugify import slugify

from lib.series_core import QSeries

# Set up logging
logger = logging.getLogger(__name__)

CACHE_SUFFIX = ".qseries"
ORDER_PATTERN = re.compile(r"-order-(\d+)$")

# %% --------------------------------------------
# * Class Definitions


class StorageManager:
    """Handles the on-disk series cache and the JSON report files.

    Parameters
    ----------
    cache_dir : str, optional
        Folder for cached series; ``None`` disables caching.
    export_dir : str, optional
        Folder that receives a timestamped copy of every stored report.
    debug : bool, optional
        Flag to indicate debug mode, by default False

    """

    _lock = threading.Lock()

    def __init__(
        self,
        cache_dir: str | None = None,
        export_dir: str | None = None,
        *,
        debug: bool = False,
    ) -> None:
        """Initialize the StorageManager with the given folders."""
        self.cache_dir = Path(cache_dir) if cache_dir else None
        self.export_dir = Path(export_dir) if export_dir else None
        self.debug = debug
        if self.cache_dir is not None:
            self.cache_dir.mkdir(parents=True, exist_ok=True)
            logger.debug("Series cache at %s", self.cache_dir)

    @classmethod
    def from_env(cls, *, debug: bool = False) -> StorageManager:
        """Build from GFLAB_CACHE_DIR (unset disables the cache)."""
        return cls(os.environ.get("GFLAB_CACHE_DIR") or None, debug=debug)

    @staticmethod
    def cache_stem(name: str, order: int) -> str:
        return slugify(f"{name}-order-{order}", lowercase=False)

    def cache_path(self, name: str, order: int) -> Path | None:
        if self.cache_dir is None:
            return None
        return self.cache_dir / f"{self.cache_stem(name, order)}{CACHE_SUFFIX}"

    def _cached_orders(self, name: str) -> list[tuple[int, Path]]:
        if self.cache_dir is None:
            return []
        prefix = slugify(name, lowercase=False)
        found = []
        for path in self.cache_dir.glob(f"{prefix}-order-*{CACHE_SUFFIX}"):
            match = ORDER_PATTERN.search(path.stem)
            if match and path.stem == f"{prefix}-order-{match.group(1)}":
                found.append((int(match.group(1)), path))
        return sorted(found)

    def load_series(self, name: str, order: int) -> QSeries | None:
        """Return a cached series truncated to ``order``, or None.

        Any cached file with an order at least ``order`` is accepted.
        """
        for cached_order, path in self._cached_orders(name):
            if cached_order < order:
                continue
            try:
                series = QSeries.from_cache_text(path.read_text(encoding="utf-8"))
            except (OSError, ValueError):
                logger.exception("Ignoring unreadable cache file %s", path)
                continue
            logger.debug("Cache hit for %s at order %d (%s)", name, order, path.name)
            return series.truncate(order)
        return None

    def store_series(self, name: str, series: QSeries) -> bool:
        """Write a series through a temporary file and an atomic replace."""
        path = self.cache_path(name, series.order)
        if path is None:
            return False
        try:
            with self._lock:
                with tempfile.NamedTemporaryFile(
                    "w",
                    encoding="utf-8",
                    dir=path.parent,
                    suffix=".tmp",
                    delete=False,
                ) as handle:
                    handle.write(series.to_cache_text())
                    temp_path = Path(handle.name)
                temp_path.replace(path)
        except OSError:
            logger.exception("Failed to write cache file %s", path)
            return False
        logger.debug("Cached %s at order %d", name, series.order)
        return True

    def get_or_generate(
        self,
        name: str,
        order: int,
        generator: Callable[[int], QSeries],
    ) -> QSeries:
        """Load from the cache or generate and store."""
        cached = self.load_series(name, order)
        if cached is not None:
            return cached
        series = generator(order)
        self.store_series(name, series)
        return series

    def store_report(
        self,
        report: dict[str, Any],
        out_path: str | Path | None = None,
        base_key: str = "report",
    ) -> bool:
        """Write a JSON report to ``out_path`` and a timestamped export copy.

        Returns
        -------
        bool
            True if all writes were successful, False if any failed

        """
        all_successful = True
        if out_path is not None:
            all_successful &= self._store_to_file(report, Path(out_path))
        if self.export_dir is not None:
            timestamp = datetime.now(tz=UTC).strftime("%Y-%m-%d_%H-%M-%S")
            self.export_dir.mkdir(parents=True, exist_ok=True)
            filename = f"{timestamp}_{slugify(base_key)}.json"
            all_successful &= self._store_to_file(report, self.export_dir / filename)
        return all_successful

    def _store_to_file(self, report: dict[str, Any], file_path: Path) -> bool:
        try:
            file_path.parent.mkdir(parents=True, exist_ok=True)
            with file_path.open("w", encoding="utf-8") as f:
                json.dump(report, f, ensure_ascii=False, indent=2)
                f.write("\n")
        except OSError:
            logger.exception("Failed to write report to file %s", file_path)
            return False
        else:
            logger.debug("Successfully exported report to: %s", file_path)
            return True
