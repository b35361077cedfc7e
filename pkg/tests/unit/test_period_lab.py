"""Unit tests for the period lab.

Covers the curve family invariants, the certified Delta_S radius, the
inversion s -> q, both period-matrix paths with the Legendre relation, exact
rational function fitting and the reconstruction of G.
"""

from __future__ import annotations

from fractions import Fraction

import pytest
from flint import arb, fmpq_poly
from lib.modular_qexp import f_series, g_series
from lib.period_lab import (
    DEFAULT_DELTA_S_RADIUS,
    BadCurveParameterError,
    CurvePoint,
    NotInDeltaSError,
    PrecisionExhaustedError,
    RationalFunction,
    compute_delta_s_radius,
    escalate_bits,
    fit_rational_function,
    half_open_shift,
    inv_j_ball,
    period_matrix,
    period_matrix_from_q,
    q_from_s,
    reconstruct_g_series,
    sample_parameters,
    two_pi_i,
)
from lib.place_eval import bit_precision, fraction_ball

S_SMALL = Fraction(1, 10000)

# %% --------------------------------------------
# * Curves


def test_curve_invariants() -> None:
    curve = CurvePoint(S_SMALL)
    factor = curve.discriminant_factor
    assert factor == 1 - Fraction(1728, 10000)
    assert curve.c4 == 1 / factor
    assert curve.c6 == -1 / factor
    assert curve.discriminant == S_SMALL / factor**3
    # j = c4^3 / Delta with Delta = (c4^3 - c6^2)/1728
    assert 1728 * curve.c4**3 / (curve.c4**3 - curve.c6**2) == curve.j == 10000


def test_curve_weierstrass_form() -> None:
    curve = CurvePoint(Fraction(1, 2000))
    assert curve.a4 == 36 * curve.a6
    assert curve.weierstrass.startswith("y^2 + x*y = x^3 + (")
    assert curve.short_cubic().degree() == 3


@pytest.mark.parametrize("s", [Fraction(0), Fraction(1, 1728)])
def test_degenerate_parameters(s: Fraction) -> None:
    with pytest.raises(BadCurveParameterError):
        CurvePoint(s)


def test_two_pi_i() -> None:
    value = two_pi_i()
    assert value.real == 0
    assert value.imag.overlaps(2 * arb.pi())


def _sign_of_tiny_gap(bits: int) -> bool | None:
    """Sign of sqrt(2)^2 - 2 + 2^-200, None while the ball straddles 0."""
    with bit_precision(bits):
        gap = arb(2).sqrt() ** 2 - 2 + fraction_ball(Fraction(1, 2**200))
        if gap > 0:
            return True
        if gap < 0:
            return False
    return None


def test_escalate_bits_doubles_until_decided() -> None:
    tried: list[int] = []

    def attempt(bits: int) -> bool | None:
        tried.append(bits)
        return _sign_of_tiny_gap(bits)

    assert escalate_bits(attempt, 64) == (256, True)
    assert tried == [64, 128, 256]


def test_escalate_bits_stops_at_cap() -> None:
    with pytest.raises(PrecisionExhaustedError, match="128 bits"):
        escalate_bits(_sign_of_tiny_gap, 64, max_bits=128)


# %% --------------------------------------------
# * Delta_S and the inverse map


def test_delta_s_radius_is_certified() -> None:
    assert compute_delta_s_radius() == DEFAULT_DELTA_S_RADIUS == Fraction(37, 65536)


def test_q_from_zero() -> None:
    q = q_from_s(0)
    assert q.real_mid == 0
    assert q.radius == 0


def test_q_from_s_outside_disc() -> None:
    with pytest.raises(NotInDeltaSError):
        q_from_s(Fraction(1, 100))


def test_q_from_s_inverts_inv_j() -> None:
    q = q_from_s(S_SMALL, bits=128)
    # q = s + 744 s^2 + O(s^3)
    assert 0 < q.real_mid - S_SMALL < 1000 * S_SMALL**2
    assert q.radius < Fraction(1, 2**60)
    with bit_precision(160):
        assert inv_j_ball(q.to_acb(), 160).real.overlaps(fraction_ball(S_SMALL))


# %% --------------------------------------------
# * Period matrices


def test_lattice_period_matrix_satisfies_legendre() -> None:
    matrix = period_matrix(CurvePoint(S_SMALL), bits=128)
    assert matrix.source == "lattice"
    assert matrix.lattice_coordinates is not None
    assert matrix.legendre_holds(128)
    assert matrix.max_radius() < Fraction(1, 10**20)


def test_tate_period_matrix_satisfies_legendre() -> None:
    q = q_from_s(S_SMALL, bits=128)
    matrix = period_matrix_from_q(q, bits=128, s=S_SMALL)
    assert matrix.source == "tate"
    assert matrix.legendre_holds(128)
    assert matrix.to_json()["s"] == "1/10000"


def test_period_paths_agree() -> None:
    lattice = period_matrix(CurvePoint(Fraction(1, 20000)), bits=128)
    tate = period_matrix_from_q(lattice.q, bits=128)
    assert lattice.f_val.overlaps(tate.f_val.to_acb())
    assert lattice.g_val.overlaps(tate.g_val.to_acb())


@pytest.mark.parametrize(
    ("value", "expected"),
    [
        (Fraction(1, 2), 0),
        (Fraction(-1, 2), -1),
        (Fraction(3, 2), 1),
        (Fraction(7, 10), 1),
        (Fraction(-3, 10), 0),
        (Fraction(0), 0),
    ],
)
def test_half_open_shift(value: Fraction, expected: int) -> None:
    with bit_precision(128):
        assert half_open_shift(fraction_ball(value)) == expected


@pytest.mark.parametrize(
    ("center", "expected"),
    [
        (Fraction(1, 2) + Fraction(1, 2**110), 0),
        (Fraction(1, 2) - Fraction(1, 2**110), 0),
        (Fraction(-1, 2) + Fraction(1, 2**110), -1),
    ],
)
def test_half_open_shift_keeps_upper_half(center: Fraction, expected: int) -> None:
    # balls that cannot be told apart from +-1/2 land on the +1/2 representative
    with bit_precision(256):
        value = fraction_ball(center, Fraction(1, 2**100))
        assert half_open_shift(value) == expected


# %% --------------------------------------------
# * Rational functions


def test_rational_function_lowest_terms() -> None:
    # (2 + 2X) / (2 - 2X^2) = 1 / (1 - X)
    function = RationalFunction.from_polys(
        fmpq_poly([2, 2]),
        fmpq_poly([2, 0, -2]),
    )
    assert function.numerator == (1,)
    assert function.denominator == (1, -1)
    assert function(Fraction(1, 2)) == 2
    assert function.to_series(5).coefficients() == [1] * 6
    assert str(function) == "(1)/(1 + -1*X^1)"


def test_fit_rational_function() -> None:
    points = [(Fraction(x), Fraction(x, 1 + x)) for x in range(1, 8)]
    assert fit_rational_function(points, 0) is None
    fitted = fit_rational_function(points, 1)
    assert fitted is not None
    assert fitted.numerator == (0, 1)
    assert fitted.denominator == (1, 1)


def test_fit_needs_points() -> None:
    with pytest.raises(ValueError, match="Need 6 points"):
        fit_rational_function([(Fraction(1), Fraction(1))], 2)


def test_sample_parameters() -> None:
    assert sample_parameters(3) == [
        Fraction(1, 2000),
        Fraction(1, 2097),
        Fraction(1, 2194),
    ]
    assert sample_parameters(1, start=2) == [Fraction(1, 2194)]


def test_reconstruct_g_series_small_budget() -> None:
    """a = (1 + 3456X)/(12(1 - 1728X)) and b = X are both of degree 1."""
    result = reconstruct_g_series(
        f_series(12), sample_count=8, bits=256, degree_budget=2, max_budget=2
    )
    assert result.held_out_ok
    assert result.b.to_series(4).coefficients() == [0, 1, 0, 0, 0]
    assert result.a(0) == Fraction(1, 12)
    assert result.series.coefficients() == g_series(11).coefficients()


def test_reconstruct_g_series_needs_samples() -> None:
    with pytest.raises(ValueError, match="below"):
        reconstruct_g_series(f_series(5), sample_count=4, degree_budget=2)
