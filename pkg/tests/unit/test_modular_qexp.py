"""Unit tests for the named q-expansions.

Golden coefficients are the classical ones (Eisenstein series, the discriminant,
j, and the Tate curve coefficients); F is cross-checked against its
hypergeometric closed form.
"""

from __future__ import annotations

import polars as pl
import pytest
from lib.modular_qexp import (
    SeriesName,
    UnsupportedExponentError,
    alpha_series,
    delta_series,
    divisor_sums,
    eisenstein,
    f_series,
    growth_estimate,
    growth_profile,
    h_series,
    hypergeometric_f_series,
    inv_j_series,
    j_series,
    named_series,
    sigma_series,
    tate_coefficients,
    theta_series,
)
from lib.series_core import QSeries, compose


def test_divisor_sums_sieve() -> None:
    assert divisor_sums(1, 6) == [0, 1, 3, 4, 7, 6, 12]
    assert divisor_sums(3, 4) == [0, 1, 9, 28, 73]


def test_sigma_series_rejects_other_exponents() -> None:
    with pytest.raises(UnsupportedExponentError):
        sigma_series(2, 10)


@pytest.mark.parametrize(
    ("which", "expected"),
    [
        ("E2", [1, -24, -72, -96]),
        ("E4", [1, 240, 2160, 6720]),
        ("E6", [1, -504, -16632, -122976]),
    ],
)
def test_eisenstein_prefixes(which: str, expected: list[int]) -> None:
    assert eisenstein(which, 3).coefficients(0) == expected


def test_unknown_eisenstein_series() -> None:
    with pytest.raises(ValueError, match="Unknown Eisenstein"):
        eisenstein("E8", 3)


def test_delta_is_ramanujan_tau() -> None:
    assert delta_series(5).coefficients(0) == [0, 1, -24, 252, -1472, 4830]


def test_j_has_a_simple_pole() -> None:
    j = j_series(2)
    assert j.valuation_offset == -1
    assert [j[n] for n in range(-1, 3)] == [1, 744, 196884, 21493760]


def test_inverse_j_prefix() -> None:
    assert inv_j_series(3).coefficients(0) == [0, 1, -744, 356652]


def test_tate_coefficients_prefixes() -> None:
    a4, a6 = tate_coefficients(3)
    assert a4.coefficients(0) == [0, -5, -45, -140]
    assert a6.coefficients(0) == [0, -1, -23, -154]


def test_alpha_prefix_and_square() -> None:
    alpha = alpha_series(40)
    assert alpha.coefficients(0, 2) == [1, -372, 10692]
    ratio = eisenstein("E6", 40) * (alpha * alpha * eisenstein("E4", 40)) ** -1
    assert ratio.agrees_with(QSeries.one(40))


def test_h_leading_term() -> None:
    assert h_series(2).coefficients(0, 1) == [0, -186]


def test_theta_inverts_inverse_j() -> None:
    theta = theta_series(30)
    assert theta.coefficients(0, 3) == [0, 1, 744, 750420]
    assert compose(theta, inv_j_series(30)).agrees_with(QSeries.variable(30))


def test_f_matches_hypergeometric_form() -> None:
    f = f_series(40)
    assert f.coefficients(0, 2) == [1, -372, -266076]
    assert f.is_integral
    assert f.agrees_with(hypergeometric_f_series(40))


def test_named_series_validates_input() -> None:
    assert named_series("theta", 5).name == SeriesName.THETA
    with pytest.raises(ValueError, match="Unknown series"):
        named_series("zeta", 5)
    with pytest.raises(ValueError, match="at least 1"):
        named_series("F", 0)


def test_named_series_is_memoized() -> None:
    assert named_series("F", 12) is named_series("F", 12)


def test_growth_profile_table() -> None:
    profile = growth_profile(theta_series(20))
    assert profile.columns == ["n", "log_abs", "root"]
    assert profile.schema["root"] == pl.Float64
    assert profile.height == 20


def test_growth_estimate_is_below_the_pole() -> None:
    estimate = growth_estimate(f_series(120), tail=40)
    assert 1000 < estimate <= 1728
