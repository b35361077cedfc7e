"""Unit tests for exact truncated series arithmetic.

Covers certified truncation orders, composition and both compositional
inverses, reciprocals with simple poles, square roots and the cache text format.
"""

from __future__ import annotations

from fractions import Fraction

import pytest
from lib.series_core import (
    BadConstantTermError,
    NonzeroInnerConstantError,
    NotInvertibleError,
    QSeries,
    UnsupportedPoleOrderError,
    ZeroLeadingCoefficientError,
    arith,
    comp_inverse,
    comp_inverse_lagrange,
    compose,
    derivative,
    reciprocal,
    sqrt_one,
)

# %% --------------------------------------------
# * Fixtures


@pytest.fixture
def geometric() -> QSeries:
    """1/(1 - X) known to X^10."""
    return QSeries.from_coeffs([1] * 11, 10)


# %% --------------------------------------------
# * Construction and queries


def test_from_coeffs_pads_polynomials() -> None:
    series = QSeries.from_coeffs([1, 2], 5)
    assert series.coefficients(0) == [1, 2, 0, 0, 0, 0]
    assert series.order == 5


def test_coefficient_above_order_is_unknown(geometric: QSeries) -> None:
    with pytest.raises(IndexError):
        _ = geometric[11]


def test_valuation_and_integrality() -> None:
    series = QSeries.from_coeffs([0, 0, Fraction(1, 2), 3], 3)
    assert series.valuation == 2
    assert not series.is_integral


def test_rejects_double_pole_storage() -> None:
    with pytest.raises(UnsupportedPoleOrderError):
        QSeries((Fraction(1),), 0, valuation_offset=-2)


# %% --------------------------------------------
# * Arithmetic


def test_sum_keeps_smaller_order() -> None:
    total = QSeries.from_coeffs([1, 1], 8) + QSeries.from_coeffs([1], 3)
    assert total.order == 3
    assert total[0] == 2


def test_product_order_accounts_for_valuations() -> None:
    x_cubed = QSeries.from_coeffs([0, 0, 0, 1], 10)
    unknown_tail = QSeries.from_coeffs([1, 1], 5)
    # X^3 * f is known to order 5 + 3
    assert arith(x_cubed, unknown_tail, "mul").order == 8


def test_scalar_multiplication() -> None:
    series = arith(QSeries.from_coeffs([1, 2], 3), QSeries.zero(3), "scalar_mul", 3)
    assert series.coefficients(0) == [3, 6, 0, 0]


def test_unknown_kind_is_rejected(geometric: QSeries) -> None:
    with pytest.raises(ValueError, match="Unknown arithmetic kind"):
        arith(geometric, geometric, "div")  # type: ignore[arg-type]


# %% --------------------------------------------
# * Composition and inversion


def test_compose_with_geometric(geometric: QSeries) -> None:
    # 1/(1 - 2X) = geometric(2X)
    doubled = compose(geometric, QSeries.from_coeffs([0, 2], 10))
    assert doubled.coefficients(0) == [2**n for n in range(11)]


def test_compose_rejects_nonzero_constant(geometric: QSeries) -> None:
    with pytest.raises(NonzeroInnerConstantError):
        compose(geometric, QSeries.from_coeffs([1, 1], 10))


def test_newton_and_lagrange_inverses_agree() -> None:
    f = QSeries.from_coeffs([0, 1, 3, -2, 7, 1], 12)
    newton = comp_inverse(f)
    lagrange = comp_inverse_lagrange(f)
    assert newton.agrees_with(lagrange)
    assert compose(f, newton).agrees_with(QSeries.variable(12))


def test_inverse_needs_linear_term() -> None:
    with pytest.raises(NotInvertibleError):
        comp_inverse(QSeries.from_coeffs([0, 0, 1], 6))


def test_reciprocal_of_unit(geometric: QSeries) -> None:
    assert reciprocal(geometric).coefficients(0) == [1, -1] + [0] * 9


def test_reciprocal_with_simple_pole() -> None:
    # 1/(X - X^2) = X^-1 + 1 + X + ...
    inverse = reciprocal(QSeries.from_coeffs([0, 1, -1], 8))
    assert inverse.valuation_offset == -1
    assert inverse.is_laurent
    assert [inverse[n] for n in range(-1, 3)] == [1, 1, 1, 1]
    assert inverse.order == 6


def test_reciprocal_rejects_zero_and_double_pole() -> None:
    with pytest.raises(ZeroLeadingCoefficientError):
        reciprocal(QSeries.zero(5))
    with pytest.raises(UnsupportedPoleOrderError):
        reciprocal(QSeries.from_coeffs([0, 0, 1], 5))


def test_sqrt_one_squares_back() -> None:
    f = QSeries.from_coeffs([1, 4, -3, 5], 15)
    root = sqrt_one(f)
    assert (root * root).agrees_with(f)
    with pytest.raises(BadConstantTermError):
        sqrt_one(QSeries.from_coeffs([4, 1], 5))


def test_derivative_lowers_order(geometric: QSeries) -> None:
    slope = derivative(geometric)
    assert slope.order == 9
    assert slope.coefficients(0) == list(range(1, 11))


# %% --------------------------------------------
# * Text forms


def test_cache_text_round_trip_keeps_pole() -> None:
    series = QSeries.from_coeffs([1, Fraction(-3, 7), 0, 5], 2, valuation_offset=-1)
    restored = QSeries.from_cache_text(series.to_cache_text())
    assert restored == series


def test_cache_text_needs_header() -> None:
    with pytest.raises(ValueError, match="header"):
        QSeries.from_cache_text("1/1\n2/1\n")


def test_str_shows_truncation() -> None:
    assert str(QSeries.from_coeffs([1, -1, 2], 2)) == "1 - X + 2*X^2 + O(X^3)"
