"""Acceptance-scale runs of every verification suite.

Each suite runs with the settings in ``gfunction_lab_config.yaml`` (orders up
to 500, 256-bit balls, p-adic precision up to p^100), so the whole module
takes several minutes of exact arithmetic.

Gated by the ``slow`` pytest marker (deselected by default) AND the
``RUN_SLOW=1`` environment variable.

Run with::

    RUN_SLOW=1 uv run pytest tests/smoke -m slow -v
"""

from __future__ import annotations

import os
from pathlib import Path
from typing import Any

import pytest
from gfunction_lab import GFunctionLab
from lib.storage_manager import StorageManager
from lib.suites import SUITES

pytestmark = [
    pytest.mark.slow,
    pytest.mark.skipif(
        os.environ.get("RUN_SLOW") != "1",
        reason="Acceptance suites take minutes; set RUN_SLOW=1 to enable.",
    ),
]


@pytest.fixture(scope="module")
def lab(tmp_path_factory: pytest.TempPathFactory) -> GFunctionLab:
    cache = tmp_path_factory.mktemp("series-cache")
    return GFunctionLab(storage_manager=StorageManager(str(cache)))


def _verdicts(report: dict[str, Any]) -> dict[str, str]:
    return {check["name"]: check["status"] for check in report["checks"]}


@pytest.mark.parametrize("suite", list(SUITES))
def test_suite_passes(lab: GFunctionLab, suite: str, tmp_path: Path) -> None:
    """Every configured suite passes with no failing or erroring check."""
    report = lab.run_suite(suite, out_path=tmp_path / f"{suite}.json")
    failed = [name for name, status in _verdicts(report).items() if status == "fail"]
    assert report["passed"], f"{suite} failed: {failed}"
    assert (tmp_path / f"{suite}.json").is_file()


@pytest.mark.parametrize("suite", ["nonarch-lemmas", "heights"])
def test_rerun_is_deterministic(lab: GFunctionLab, suite: str) -> None:
    """Same seed, same checks and verdicts."""
    first = lab.run_suite(suite, seed=11)
    second = lab.run_suite(suite, seed=11)
    assert _verdicts(first) == _verdicts(second)
    strip = [
        {k: v for k, v in check.items() if k != "elapsed_ms"}
        for check in first["checks"]
    ]
    assert strip == [
        {k: v for k, v in check.items() if k != "elapsed_ms"}
        for check in second["checks"]
    ]


def test_doubling_precision_keeps_verdicts(lab: GFunctionLab) -> None:
    """Certified verdicts do not flip when the working precision doubles."""
    base = lab.run_suite("nonarch-lemmas", precision=40, samples=50)
    doubled = lab.run_suite("nonarch-lemmas", precision=80, samples=50)
    assert _verdicts(base) == _verdicts(doubled)
