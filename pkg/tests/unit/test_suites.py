"""Unit tests for the check runner, suite options and the cheap suites.

The expensive suites (periods, padic-relations, relations and modpoly at their
configured orders) run in tests/smoke.
"""

from __future__ import annotations

from fractions import Fraction

import pytest
from lib.modular_qexp import delta_series
from lib.suites import (
    SUITES,
    CheckOutcome,
    CheckStatus,
    SuiteOptions,
    UnknownSuiteError,
    build_report,
    companion_parameter,
    heights_checks,
    identities_checks,
    pentagonal_delta,
    relations_checks,
    report_as_text,
    run_checks,
    suite_checks,
)

# %% --------------------------------------------
# * Fixtures


@pytest.fixture
def options() -> SuiteOptions:
    return SuiteOptions(
        order=40,
        seed=7,
        settings={
            "integrality_order": 40,
            "divisor_scan_max": 2000,
            "divisor_eps": 0.5,
            "coefficient_bounds": {"F": {"scale": 10, "radius": "1/1800"}},
        },
    )


def _failing() -> CheckOutcome:
    return CheckOutcome(passed=False, lhs="1", rhs="2")


def _raising() -> CheckOutcome:
    msg = "no convergence"
    raise ArithmeticError(msg)


# %% --------------------------------------------
# * Runner


def test_run_checks_statuses_and_order() -> None:
    results = run_checks(
        [
            ("zeta", lambda: CheckOutcome(passed=True)),
            ("alpha", _failing),
            ("mu", lambda: CheckOutcome(passed=True, skipped=True)),
            ("beta", _raising),
        ]
    )
    assert [r.name for r in results] == ["alpha", "beta", "mu", "zeta"]
    statuses = {r.name: r.status for r in results}
    assert statuses == {
        "alpha": CheckStatus.FAIL,
        "beta": CheckStatus.FAIL,
        "mu": CheckStatus.SKIP,
        "zeta": CheckStatus.PASS,
    }
    raised = next(r for r in results if r.name == "beta")
    assert raised.detail["error"] == "ArithmeticError: no convergence"
    assert all(r.elapsed_ms >= 0 for r in results)


def test_run_checks_rejects_duplicate_names() -> None:
    check = ("same", lambda: CheckOutcome(passed=True))
    with pytest.raises(ValueError, match="unique"):
        run_checks([check, check])


def test_unknown_suite(options: SuiteOptions) -> None:
    with pytest.raises(UnknownSuiteError, match="choose from"):
        suite_checks("nonsense", options)


def test_every_suite_builds_checks(options: SuiteOptions) -> None:
    for name in SUITES:
        names = [check_name for check_name, _ in suite_checks(name, options)]
        assert names, name
        assert len(set(names)) == len(names)


# %% --------------------------------------------
# * Options


@pytest.mark.parametrize(
    ("overrides", "message"),
    [
        ({"order": 0}, "--order"),
        ({"bits": 16}, "--bits"),
        ({"precision": 0}, "--precision"),
        ({"samples": 0}, "--samples"),
        ({"primes": (2, 4)}, "--prime"),
    ],
)
def test_options_validation(overrides: dict, message: str) -> None:
    arguments = {"order": 10, **overrides}
    with pytest.raises(ValueError, match=message):
        SuiteOptions(**arguments)


def test_options_accessors(options: SuiteOptions) -> None:
    assert options.setting("divisor_eps") == 0.5
    assert options.setting("missing", 3) == 3
    assert options.coefficient_bound("F").radius == Fraction(1, 1800)
    with pytest.raises(KeyError):
        options.coefficient_bound("G")
    assert options.series("F", 5).order == 5
    assert options.to_json()["seed"] == 7


def test_options_series_source() -> None:
    requested = []

    def source(name: str, order: int) -> object:
        requested.append((name, order))
        return object()

    options = SuiteOptions(order=12, series_source=source)
    options.series("theta")
    options.series("F", 3)
    assert requested == [("theta", 12), ("F", 3)]


# %% --------------------------------------------
# * Suites


def test_pentagonal_delta_matches_eisenstein_form() -> None:
    expected = delta_series(30)
    assert pentagonal_delta(30).coefficients() == expected.coefficients()
    assert pentagonal_delta(6).coefficients() == [0, 1, -24, 252, -1472, 4830, -6048]


CONFIGURED_T = [Fraction(5), Fraction(3), Fraction(15, 4)]


@pytest.mark.parametrize(
    ("t", "configured", "expected"),
    [
        (Fraction(5), CONFIGURED_T, Fraction(3)),
        (Fraction(3), CONFIGURED_T, Fraction(15, 4)),
        (Fraction(15, 4), CONFIGURED_T, Fraction(5)),
        (Fraction(5), [Fraction(5), Fraction(5), Fraction(3)], Fraction(3)),
        (Fraction(7), [Fraction(3)], Fraction(3)),
        (Fraction(5), [Fraction(5)], None),
    ],
)
def test_companion_parameter(
    t: Fraction,
    configured: list[Fraction],
    expected: Fraction | None,
) -> None:
    companion = companion_parameter(t, configured)
    assert companion == expected
    assert companion != t


def test_relations_suite_finds_order_two_ode() -> None:
    options = SuiteOptions(
        order=160,
        settings={"ode_held_out": 50, "ode_order_two_degree": 12},
    )
    checks = dict(relations_checks(options))
    outcome = checks["ode_for_F_order_two"]()
    assert outcome.passed
    assert outcome.rhs == "order 2"


def test_identities_suite(options: SuiteOptions) -> None:
    results = run_checks(identities_checks(options))
    failed = [r.name for r in results if r.status != CheckStatus.PASS]
    assert failed == []
    assert "golden_theta" in {r.name for r in results}


def test_heights_suite_report(options: SuiteOptions) -> None:
    results = run_checks(heights_checks(options))
    report = build_report("heights", results, options)

    assert report["suite"] == "heights"
    assert report["passed"]
    assert [c["name"] for c in report["checks"]] == [
        "divisor_bound_scan",
        "divisor_count_12",
        "height_golden_ratio_root",
        "height_two_thirds",
    ]
    assert report["toolchain"]["seed"] == 7
    assert "python_flint" in report["toolchain"]

    text = report_as_text(report)
    assert text.startswith("suite heights: PASS")
    assert "divisor_count_12" in text


def test_failed_report_text(options: SuiteOptions) -> None:
    report = build_report("demo", run_checks([("broken", _failing)]), options)
    assert not report["passed"]
    text = report_as_text(report)
    assert "FAIL" in text
    assert "lhs: 1" in text
