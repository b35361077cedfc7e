"""Unit tests for the command-line entry point.

Commands run in-process through ``main`` with a lab whose series cache and
reports live in a temporary folder.
"""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path

import pytest
from cli import EXIT_FAILED, EXIT_OK, EXIT_USAGE, main
from gfunction_lab import EVALUATION_CONFIG, MAIN_CONFIG, GFunctionLab, load_config
from lib.isogeny_relations import IsogenyPair, Provenance
from lib.series_core import QSeries
from lib.storage_manager import StorageManager

# %% --------------------------------------------
# * Fixtures


@pytest.fixture
def lab(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> GFunctionLab:
    monkeypatch.delenv("GFLAB_DEBUG", raising=False)
    config = load_config(MAIN_CONFIG)
    config["suites"]["heights"]["divisor_scan_max"] = 5000
    return GFunctionLab(
        config=config,
        evaluation_config=load_config(EVALUATION_CONFIG),
        storage_manager=StorageManager(str(tmp_path / "cache")),
    )


def _stdout_json(capsys: pytest.CaptureFixture[str]) -> dict:
    return json.loads(capsys.readouterr().out)


# %% --------------------------------------------
# * Suites


def test_unknown_suite_is_a_usage_error(
    lab: GFunctionLab, capsys: pytest.CaptureFixture[str]
) -> None:
    assert main(["suite", "nonsense"], lab) == EXIT_USAGE
    assert "Unknown suite" in capsys.readouterr().err


def test_bad_option_is_a_usage_error(lab: GFunctionLab) -> None:
    assert main(["suite", "heights", "--prime", "4"], lab) == EXIT_USAGE


def test_heights_suite_to_file(lab: GFunctionLab, tmp_path: Path) -> None:
    out_path = tmp_path / "reports" / "heights.json"
    assert main(["suite", "heights", "--out", str(out_path)], lab) == EXIT_OK

    report = json.loads(out_path.read_text(encoding="utf-8"))
    assert report["suite"] == "heights"
    assert report["passed"]
    assert {c["status"] for c in report["checks"]} == {"pass"}
    assert lab.errors == []


def test_suite_text_output(
    lab: GFunctionLab, capsys: pytest.CaptureFixture[str]
) -> None:
    assert main(["suite", "heights", "--format", "text"], lab) == EXIT_OK
    assert capsys.readouterr().out.startswith("suite heights: PASS")


# %% --------------------------------------------
# * Series commands


def test_qexp_json(lab: GFunctionLab, capsys: pytest.CaptureFixture[str]) -> None:
    assert main(["qexp", "theta", "--order", "5", "--format", "json"], lab) == EXIT_OK
    payload = _stdout_json(capsys)
    assert payload["name"] == "theta"
    assert payload["coeffs"][:4] == ["0", "1", "744", "750420"]


def test_qexp_cache_file(lab: GFunctionLab, tmp_path: Path) -> None:
    out_path = tmp_path / "alpha.qseries"
    arguments = ["qexp", "alpha", "--order", "6", "--format", "cache"]
    assert main([*arguments, "--out", str(out_path)], lab) == EXIT_OK
    series = QSeries.from_cache_text(out_path.read_text(encoding="utf-8"))
    assert series.coefficients(0, 2) == [1, -372, 10692]


def test_eval_padic_from_cache_file(
    lab: GFunctionLab, tmp_path: Path, capsys: pytest.CaptureFixture[str]
) -> None:
    cache_file = tmp_path / "geometric.qseries"
    cache_file.write_text(
        QSeries.from_coeffs([1] * 41, 40).to_cache_text(), encoding="utf-8"
    )
    arguments = ["eval", "--series", str(cache_file), "--x", "5"]
    assert main([*arguments, "--place", "p=5", "--precision", "10"], lab) == EXIT_OK
    payload = _stdout_json(capsys)
    assert payload["certified"]
    assert payload["precision"] == "5^10"


def test_eval_outside_disc(lab: GFunctionLab) -> None:
    arguments = ["eval", "--series", "F", "--x", "1/5", "--place", "p=5"]
    assert main([*arguments, "--order", "20"], lab) == EXIT_USAGE


def test_eval_unknown_series(lab: GFunctionLab, tmp_path: Path) -> None:
    missing = str(tmp_path / "missing.qseries")
    assert main(["eval", "--series", missing, "--x", "1/2"], lab) == EXIT_USAGE


def test_ode_guess(lab: GFunctionLab, capsys: pytest.CaptureFixture[str]) -> None:
    assert main(["ode", "guess", "--series", "F", "--order", "150"], lab) == EXIT_OK
    payload = _stdout_json(capsys)
    assert payload["order"] == 2


def test_relations_find_with_specialization(
    lab: GFunctionLab, capsys: pytest.CaptureFixture[str]
) -> None:
    arguments = ["relations", "find", "--series", "alpha,alpha", "--xdeg", "0"]
    assert main([*arguments, "--order", "40", "--xi", "1/10000"], lab) == EXIT_OK
    payload = _stdout_json(capsys)
    assert payload["series"] == ["alpha", "alpha"]
    assert len(payload["relations"]) == 1
    assert payload["relations"][0]["specialization_safe"]


# %% --------------------------------------------
# * Heights and modular polynomials


def test_height_of_rational(
    lab: GFunctionLab, capsys: pytest.CaptureFixture[str]
) -> None:
    assert main(["height", "2/3"], lab) == EXIT_OK
    payload = _stdout_json(capsys)
    assert payload["subject"] == "2/3"
    assert "1.0986122886681" in payload["height"]


@pytest.mark.parametrize(
    "arguments",
    [["height"], ["height", "--minpoly", "2,4"], ["height", "--minpoly", "3"]],
)
def test_height_usage_errors(lab: GFunctionLab, arguments: list[str]) -> None:
    assert main(arguments, lab) == EXIT_USAGE


def test_modpoly(lab: GFunctionLab, capsys: pytest.CaptureFixture[str]) -> None:
    assert main(["modpoly", "--level", "2", "--order", "60"], lab) == EXIT_OK
    payload = _stdout_json(capsys)
    constant = next(t for t in payload["terms"] if t["monomial"] == [0, 0])
    assert constant["coefficient"] == "-157464000000000"


# %% --------------------------------------------
# * Relation bundles


def test_relation_build_and_verify(
    lab: GFunctionLab, tmp_path: Path, capsys: pytest.CaptureFixture[str]
) -> None:
    pair = IsogenyPair(
        2,
        Provenance.SYNTHETIC,
        s1=Fraction(25, 261**3),
        s2=Fraction(5, 9261),
        a=Fraction(2),
        b=Fraction(0),
        d=Fraction(1),
        matrix=(2, 0, 0, 1),
    )
    pair_file = tmp_path / "pair.json"
    pair_file.write_text(json.dumps(pair.to_dict()), encoding="utf-8")
    bundle_file = tmp_path / "bundle.json"

    arguments = ["relation", "build", "--pair-file", str(pair_file)]
    assert main([*arguments, "--out", str(bundle_file)], lab) == EXIT_OK
    bundle = json.loads(bundle_file.read_text(encoding="utf-8"))
    assert bundle["P_fin"]["degree"] == 4
    assert bundle["P_inf"]["degree"] == 1

    arguments = ["relation", "verify", "--rel", str(bundle_file)]
    arguments += ["--pair", str(pair_file), "--places", "p=5,p=3"]
    code = main([*arguments, "--precision", "10"], lab)
    payload = _stdout_json(capsys)
    places = {p["place"]: p for p in payload["places"]}
    assert places["p=5"]["admissible"]
    assert not places["p=3"]["admissible"]
    assert code == (EXIT_OK if payload["passed"] else EXIT_FAILED)
