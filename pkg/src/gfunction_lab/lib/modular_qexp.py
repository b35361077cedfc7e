"""Module generating the named q-expansions of the 1/j family."""

# * Creation : Oct 2026
# * License: MIT license

# %% --------------------------------------------
# * Libraries

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import StrEnum
from fractions import Fraction
from functools import cache

import polars as pl

from lib.series_core import (
    QSeries,
    comp_inverse,
    compose,
    reciprocal,
    sqrt_one,
)

# Set up logging
logger = logging.getLogger(__name__)

# %% --------------------------------------------
# * Types


class UnsupportedExponentError(ValueError):
    """Raised for divisor-sum exponents other than 1, 3 and 5."""


class IntegralityViolationError(ArithmeticError):
    """Raised when a series that must lie in Z[[X]] has a fractional coefficient."""


class SeriesName(StrEnum):
    """Names of the series this module can generate."""

    S1 = "s1"
    S3 = "s3"
    S5 = "s5"
    E2 = "E2"
    E4 = "E4"
    E6 = "E6"
    A4_TATE = "a4_tate"
    A6_TATE = "a6_tate"
    J = "j"
    INV_J = "inv_j"
    H = "h"
    ALPHA = "alpha"
    THETA = "theta"
    F = "F"
    G = "G"


@dataclass(frozen=True)
class NamedSeries:
    """A generated series together with its name and order."""

    name: SeriesName
    series: QSeries
    order: int


EISENSTEIN_FACTORS = {"E2": (1, -24), "E4": (3, 240), "E6": (5, -504)}

# %% --------------------------------------------
# * Generators


def divisor_sums(k: int, order: int) -> list[int]:
    """Return [sigma_k(0) = 0, sigma_k(1), ..., sigma_k(order)] by a sieve."""
    sums = [0] * (order + 1)
    for d in range(1, order + 1):
        power = d**k
        for multiple in range(d, order + 1, d):
            sums[multiple] += power
    return sums


def sigma_series(k: int, order: int) -> QSeries:
    """Return s_k = sum sigma_k(n) q^n.

    Raises
    ------
    UnsupportedExponentError
        If k is not one of 1, 3, 5.

    """
    if k not in (1, 3, 5):
        msg = f"Divisor sums are only generated for k in (1, 3, 5), not {k}"
        raise UnsupportedExponentError(msg)
    return QSeries.from_coeffs(divisor_sums(k, order), order)


def eisenstein(which: str, order: int) -> QSeries:
    """Return E2, E4 or E6 as 1 + c * s_k."""
    try:
        k, factor = EISENSTEIN_FACTORS[which]
    except KeyError as exc:
        msg = f"Unknown Eisenstein series: {which}"
        raise ValueError(msg) from exc
    return 1 + factor * sigma_series(k, max(order, 1)).truncate(order)


def _require_integral(name: str, series: QSeries) -> QSeries:
    if not series.is_integral:
        coeffs = series.coefficients(0)
        bad = next(n for n, c in enumerate(coeffs) if c.denominator != 1)
        msg = f"{name} has a non-integral coefficient at X^{bad}"
        raise IntegralityViolationError(msg)
    return series


def tate_coefficients(order: int) -> tuple[QSeries, QSeries]:
    """Return the Tate curve coefficients (a4, a6) = (-5 s3, -(5 s3 + 7 s5)/12)."""
    s3 = sigma_series(3, order)
    s5 = sigma_series(5, order)
    a4 = -5 * s3
    a6 = (5 * s3 + 7 * s5) * Fraction(-1, 12)
    return _require_integral("a4_tate", a4), _require_integral("a6_tate", a6)


def delta_series(order: int) -> QSeries:
    """Return the discriminant (E4^3 - E6^2)/1728."""
    e4 = eisenstein("E4", order)
    e6 = eisenstein("E6", order)
    return (e4 * e4 * e4 - e6 * e6) * Fraction(1, 1728)


def j_series(order: int) -> QSeries:
    """Return j = E4^3 / Delta with a simple pole, known to X^order."""
    # 1/Delta loses two orders (valuation one on each side)
    e4 = eisenstein("E4", order + 2)
    j = e4 * e4 * e4 * reciprocal(delta_series(order + 2))
    return _require_integral("j", j.truncate(order))


def inv_j_series(order: int) -> QSeries:
    """Return 1/j = q - 744 q^2 + ..., a power series with zero constant term."""
    inv_j = reciprocal(j_series(max(order - 2, 1)))
    return _require_integral("inv_j", inv_j.truncate(order))


def h_series(order: int) -> QSeries:
    """Return h with E6/E4 = 1 + 4h."""
    ratio = eisenstein("E6", order) * reciprocal(eisenstein("E4", order))
    return (ratio - 1) * Fraction(1, 4)


def alpha_series(order: int) -> QSeries:
    """Return alpha = (1+4X)^(1/2) composed with h; alpha^2 = E6/E4, alpha(0) = 1."""
    root = sqrt_one(QSeries.from_coeffs([1, 4], order))
    return _require_integral("alpha", compose(root, h_series(order)))


def theta_series(order: int) -> QSeries:
    """Return theta, the compositional inverse of 1/j."""
    return _require_integral("theta", comp_inverse(inv_j_series(order)))


def f_series(order: int) -> QSeries:
    """Return F = alpha composed with theta."""
    return _require_integral("F", compose(alpha_series(order), theta_series(order)))


def g_series(order: int) -> QSeries:
    """Return G = (E2 / (12 alpha)) composed with theta."""
    quotient = eisenstein("E2", order) * reciprocal(12 * alpha_series(order))
    return compose(quotient, theta_series(order))


def hypergeometric_f_series(order: int) -> QSeries:
    """Return (1 - 1728X)^(1/4) * 2F1(1/12, 5/12; 1; 1728X).

    Independent closed form for F used to cross-check the composition.
    """
    coeffs = [Fraction(1)]
    for n in range(order):
        # ratio of consecutive 2F1 terms, argument scaled by 1728
        step = (Fraction(1, 12) + n) * (Fraction(5, 12) + n) / ((n + 1) * (n + 1))
        coeffs.append(coeffs[-1] * step * 1728)
    hypergeometric = QSeries.from_coeffs(coeffs, order)
    fourth_root = sqrt_one(sqrt_one(QSeries.from_coeffs([1, -1728], order)))
    return fourth_root * hypergeometric


GENERATORS = {
    SeriesName.S1: lambda n: sigma_series(1, n),
    SeriesName.S3: lambda n: sigma_series(3, n),
    SeriesName.S5: lambda n: sigma_series(5, n),
    SeriesName.E2: lambda n: eisenstein("E2", n),
    SeriesName.E4: lambda n: eisenstein("E4", n),
    SeriesName.E6: lambda n: eisenstein("E6", n),
    SeriesName.A4_TATE: lambda n: tate_coefficients(n)[0],
    SeriesName.A6_TATE: lambda n: tate_coefficients(n)[1],
    SeriesName.J: j_series,
    SeriesName.INV_J: inv_j_series,
    SeriesName.H: h_series,
    SeriesName.ALPHA: alpha_series,
    SeriesName.THETA: theta_series,
    SeriesName.F: f_series,
    SeriesName.G: g_series,
}


@cache
def named_series(name: str, order: int) -> NamedSeries:
    """Generate (and memoize) a named series.

    Parameters
    ----------
    name : str
        One of the ``SeriesName`` values.
    order : int
        Truncation order, at least 1.

    Returns
    -------
    NamedSeries
        The series known modulo X^(order+1).

    """
    try:
        series_name = SeriesName(name)
    except ValueError as exc:
        msg = f"Unknown series name: {name}"
        raise ValueError(msg) from exc
    if order < 1:
        msg = f"Series order must be at least 1, got {order}"
        raise ValueError(msg)

    logger.debug("Generating %s to order %d", series_name, order)
    series = GENERATORS[series_name](order)
    return NamedSeries(series_name, series, order)


# %% --------------------------------------------
# * Growth


def growth_profile(series: QSeries, start: int = 1) -> pl.DataFrame:
    """Tabulate |a_n|^(1/n) over the known coefficients of a power series.

    Returns
    -------
    pl.DataFrame
        Columns ``n``, ``log_abs`` (natural log of |a_n|) and ``root``
        (|a_n|^(1/n)); zero coefficients are skipped.

    """
    rows = []
    for n in range(max(start, 1), series.order + 1):
        coeff = series[n]
        if not coeff:
            continue
        log_abs = math.log(abs(coeff.numerator)) - math.log(coeff.denominator)
        rows.append({"n": n, "log_abs": log_abs})
    profile = pl.DataFrame(rows, schema={"n": pl.Int64, "log_abs": pl.Float64})
    return profile.with_columns((pl.col("log_abs") / pl.col("n")).exp().alias("root"))


def growth_estimate(series: QSeries, tail: int = 50) -> float:
    """Max of |a_n|^(1/n) over the last ``tail`` known coefficients."""
    profile = growth_profile(series)
    return float(profile.tail(tail).select(pl.col("root").max()).item())
