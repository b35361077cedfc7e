"""Exact truncated power and Laurent series over the rationals."""

# * Creation : Oct 2026
# * License: MIT license

# %% --------------------------------------------
# * Libraries

from __future__ import annotations

import logging
import re
from collections.abc import Iterable
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Literal

from flint import fmpq, fmpq_poly

# Set up logging
logger = logging.getLogger(__name__)

Scalar = int | Fraction

CACHE_HEADER = re.compile(r"^QSERIES v1 offset=(-?\d+) order=(-?\d+)$")

# %% --------------------------------------------
# * Exceptions


class NonzeroInnerConstantError(ValueError):
    """Raised when the inner series of a composition has a nonzero constant term."""


class NotInvertibleError(ValueError):
    """Raised when a series has no compositional inverse."""


class ZeroLeadingCoefficientError(ZeroDivisionError):
    """Raised when a series is zero to its known order and cannot be inverted."""


class BadConstantTermError(ValueError):
    """Raised when a square root is requested for a series with f(0) != 1."""


class UnsupportedPoleOrderError(ValueError):
    """Raised when a result would need a principal part longer than one term."""


# %% --------------------------------------------
# * Polynomial helpers (flint)


def _to_fmpq(value: Scalar) -> fmpq:
    value = Fraction(value)
    return fmpq(value.numerator, value.denominator)


def _to_fraction(value: fmpq) -> Fraction:
    return Fraction(int(value.p), int(value.q))


def _poly(coeffs: Iterable[Scalar]) -> fmpq_poly:
    return fmpq_poly([_to_fmpq(c) for c in coeffs])


def _trunc(poly: fmpq_poly, terms: int) -> fmpq_poly:
    """Keep the terms of degree < terms."""
    if terms <= 0:
        return fmpq_poly()
    if poly.degree() < terms:
        return poly
    return fmpq_poly(poly.coeffs()[:terms])


def _coeff_list(poly: fmpq_poly, terms: int) -> list[Fraction]:
    coeffs = [_to_fraction(c) for c in poly.coeffs()[:terms]]
    return coeffs + [Fraction(0)] * (terms - len(coeffs))


def _inv_low(unit: fmpq_poly, terms: int) -> fmpq_poly:
    """Reciprocal of a series with nonzero constant term, Newton iteration."""
    inverse = fmpq_poly([1 / unit[0]])
    known = 1
    while known < terms:
        known = min(2 * known, terms)
        inverse = _trunc(inverse * (2 - _trunc(unit, known) * inverse), known)
    return inverse


def _sqrt_low(poly: fmpq_poly, terms: int) -> fmpq_poly:
    """Square root of a series with constant term 1, Newton iteration."""
    root = fmpq_poly([1])
    known = 1
    half = fmpq(1, 2)
    while known < terms:
        known = min(2 * known, terms)
        correction = _trunc(_trunc(poly, known) * _inv_low(root, known), known)
        root = (root + correction) * half
    return _trunc(root, terms)


def _compose_low(outer: fmpq_poly, inner: fmpq_poly, terms: int) -> fmpq_poly:
    """Horner evaluation of outer at inner, inner(0) = 0, modulo X^terms."""
    inner = _trunc(inner, terms)
    result = fmpq_poly()
    for coeff in reversed(outer.coeffs()[:terms]):
        result = _trunc(result * inner, terms) + coeff
    return result


# %% --------------------------------------------
# * QSeries


@dataclass(frozen=True)
class QSeries:
    """Truncated series with exact rational coefficients.

    The series is known modulo X^(order+1). Coefficients are stored from
    ``valuation_offset`` (0 for power series, -1 for a simple pole) up to
    ``order``.

    Parameters
    ----------
    coeffs : tuple[Fraction, ...]
        Coefficients of X^valuation_offset, ..., X^order.
    order : int
        Truncation order.
    valuation_offset : int, optional
        Index of the first stored coefficient, by default 0.

    """

    coeffs: tuple[Fraction, ...]
    order: int
    valuation_offset: int = 0

    def __post_init__(self) -> None:
        """Normalize coefficients and check the storage invariant."""
        if self.valuation_offset not in (-1, 0):
            msg = f"Unsupported valuation offset: {self.valuation_offset}"
            raise UnsupportedPoleOrderError(msg)
        coeffs = tuple(Fraction(c) for c in self.coeffs)
        if len(coeffs) != self.order - self.valuation_offset + 1:
            msg = (
                f"Expected {self.order - self.valuation_offset + 1} coefficients, "
                f"got {len(coeffs)}"
            )
            raise ValueError(msg)
        object.__setattr__(self, "coeffs", coeffs)

    # ---- constructors

    @classmethod
    def from_coeffs(
        cls,
        coeffs: Iterable[Scalar],
        order: int | None = None,
        valuation_offset: int = 0,
    ) -> QSeries:
        """Build a series from a coefficient list.

        Without ``order`` the list is taken as exact up to its last entry. With
        ``order`` the list is truncated or padded with zeros, so polynomials are
        known exactly to any order.
        """
        values = [Fraction(c) for c in coeffs]
        if order is None:
            order = len(values) + valuation_offset - 1
        length = order - valuation_offset + 1
        values = values[:length] + [Fraction(0)] * max(0, length - len(values))
        return cls(tuple(values), order, valuation_offset)

    @classmethod
    def zero(cls, order: int) -> QSeries:
        """Return the zero series known to ``order``."""
        return cls.from_coeffs([], order)

    @classmethod
    def one(cls, order: int) -> QSeries:
        """Return the constant series 1 known to ``order``."""
        return cls.from_coeffs([1], order)

    @classmethod
    def variable(cls, order: int) -> QSeries:
        """Return the series X known to ``order``."""
        return cls.from_coeffs([0, 1], order)

    # ---- basic queries

    def __getitem__(self, index: int) -> Fraction:
        """Coefficient of X^index; indices above ``order`` are unknown."""
        if index > self.order:
            msg = f"Coefficient {index} unknown (series order {self.order})"
            raise IndexError(msg)
        if index < self.valuation_offset:
            return Fraction(0)
        return self.coeffs[index - self.valuation_offset]

    @property
    def valuation(self) -> int:
        """Index of the first nonzero known coefficient (order + 1 if none)."""
        for shift, coeff in enumerate(self.coeffs):
            if coeff:
                return self.valuation_offset + shift
        return self.order + 1

    @property
    def is_integral(self) -> bool:
        """True when every known coefficient is an integer."""
        return all(c.denominator == 1 for c in self.coeffs)

    @property
    def is_laurent(self) -> bool:
        return self.valuation_offset < 0 and self.coeffs[0] != 0

    def coefficients(self, start: int = 0, stop: int | None = None) -> list[Fraction]:
        """Coefficients of X^start, ..., X^stop (default: up to order)."""
        stop = self.order if stop is None else stop
        return [self[n] for n in range(start, stop + 1)]

    def truncate(self, order: int) -> QSeries:
        """Forget every coefficient above ``order``."""
        if order >= self.order:
            return self
        return QSeries(
            self.coeffs[: order - self.valuation_offset + 1],
            order,
            self.valuation_offset,
        )

    def agrees_with(self, other: QSeries) -> bool:
        """Coefficientwise equality up to the smaller of the two orders."""
        common = min(self.order, other.order)
        start = min(self.valuation_offset, other.valuation_offset)
        return all(self[n] == other[n] for n in range(start, common + 1))

    def _shifted_poly(self) -> fmpq_poly:
        """X^(-valuation_offset) times the known part, as a flint polynomial."""
        return _poly(self.coeffs)

    # ---- operators

    def __add__(self, other: QSeries | Scalar) -> QSeries:
        return arith(self, _as_series(other, self.order), "add")

    def __radd__(self, other: Scalar) -> QSeries:
        return arith(_as_series(other, self.order), self, "add")

    def __sub__(self, other: QSeries | Scalar) -> QSeries:
        return arith(self, _as_series(other, self.order), "sub")

    def __rsub__(self, other: Scalar) -> QSeries:
        return arith(_as_series(other, self.order), self, "sub")

    def __neg__(self) -> QSeries:
        return arith(self, self, "scalar_mul", scalar=-1)

    def __mul__(self, other: QSeries | Scalar) -> QSeries:
        if isinstance(other, QSeries):
            return arith(self, other, "mul")
        return arith(self, self, "scalar_mul", scalar=other)

    def __rmul__(self, other: Scalar) -> QSeries:
        return arith(self, self, "scalar_mul", scalar=other)

    def __pow__(self, exponent: int) -> QSeries:
        if exponent < 0:
            return reciprocal(self) ** (-exponent)
        result = QSeries.one(self.order)
        for _ in range(exponent):
            result = result * self
        return result

    # ---- text forms

    def __str__(self) -> str:
        terms = []
        for shift, coeff in enumerate(self.coeffs):
            if not coeff:
                continue
            power = self.valuation_offset + shift
            monomial = "" if power == 0 else ("X" if power == 1 else f"X^{power}")
            if power != 0 and abs(coeff) == 1:
                text = monomial
            else:
                text = f"{abs(coeff)}*{monomial}" if monomial else f"{abs(coeff)}"
            terms.append(("- " if coeff < 0 else "+ ") + text)
        body = " ".join(terms).removeprefix("+ ") or "0"
        return f"{body} + O(X^{self.order + 1})"

    def to_cache_text(self) -> str:
        """Serialize to the line-oriented cache format."""
        lines = [f"QSERIES v1 offset={self.valuation_offset} order={self.order}"]
        lines.extend(f"{c.numerator}/{c.denominator}" for c in self.coeffs)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_cache_text(cls, text: str) -> QSeries:
        """Parse the cache format written by ``to_cache_text``."""
        lines = text.strip().splitlines()
        header = CACHE_HEADER.match(lines[0].strip()) if lines else None
        if header is None:
            msg = "Missing or malformed QSERIES header"
            raise ValueError(msg)
        offset, order = int(header.group(1)), int(header.group(2))
        coeffs = []
        for line in lines[1:]:
            numerator, _, denominator = line.strip().partition("/")
            coeffs.append(Fraction(int(numerator), int(denominator)))
        return cls(tuple(coeffs), order, offset)

    def to_json(self) -> dict[str, Any]:
        """Return a JSON-friendly dictionary with string coefficients."""
        return {
            "valuation_offset": self.valuation_offset,
            "order": self.order,
            "coeffs": [str(c) for c in self.coeffs],
        }


def _as_series(value: QSeries | Scalar, order: int) -> QSeries:
    if isinstance(value, QSeries):
        return value
    return QSeries.from_coeffs([value], order)


# %% --------------------------------------------
# * Operations


def arith(
    f: QSeries,
    g: QSeries,
    kind: Literal["add", "sub", "mul", "scalar_mul"],
    scalar: Scalar | None = None,
) -> QSeries:
    """Exact ring operation with certified truncation order.

    Parameters
    ----------
    f, g : QSeries
        Operands. For ``scalar_mul`` only ``f`` is used.
    kind : {"add", "sub", "mul", "scalar_mul"}
        Operation to perform.
    scalar : int or Fraction, optional
        Multiplier for ``scalar_mul``.

    Returns
    -------
    QSeries
        Result known to the largest order the inputs certify.

    """
    if kind == "scalar_mul":
        factor = Fraction(scalar if scalar is not None else 1)
        return QSeries(
            tuple(factor * c for c in f.coeffs),
            f.order,
            f.valuation_offset,
        )

    if kind in ("add", "sub"):
        sign = 1 if kind == "add" else -1
        offset = min(f.valuation_offset, g.valuation_offset)
        order = min(f.order, g.order)
        coeffs = [f[n] + sign * g[n] for n in range(offset, order + 1)]
        return QSeries(tuple(coeffs), order, offset)

    if kind == "mul":
        offset = f.valuation_offset + g.valuation_offset
        if offset < -1:
            msg = "Product of two Laurent series needs a double pole"
            raise UnsupportedPoleOrderError(msg)
        # coefficient k needs f_i, g_(k-i) with i >= v(f), k - i >= v(g)
        order = max(min(f.order + g.valuation, g.order + f.valuation), offset - 1)
        product = f._shifted_poly() * g._shifted_poly()
        return QSeries(
            tuple(_coeff_list(product, order - offset + 1)),
            order,
            offset,
        )

    msg = f"Unknown arithmetic kind: {kind}"
    raise ValueError(msg)


def compose(f: QSeries, g: QSeries) -> QSeries:
    """Return f(g(X)) for a power series g with g(0) = 0.

    Raises
    ------
    NonzeroInnerConstantError
        If g(0) is not zero.
    UnsupportedPoleOrderError
        If either argument has a pole.

    """
    if f.is_laurent or g.is_laurent:
        msg = "compose expects power series"
        raise UnsupportedPoleOrderError(msg)
    if g.order >= 0 and g[0] != 0:
        msg = f"Inner series has constant term {g[0]}"
        raise NonzeroInnerConstantError(msg)

    inner_valuation = g.valuation
    order = min((f.order + 1) * inner_valuation - 1, g.order)
    outer = _poly(f.coefficients(0))
    inner = _poly(g.coefficients(0))
    result = _compose_low(outer, inner, order + 1)
    return QSeries(tuple(_coeff_list(result, order + 1)), order)


def comp_inverse(f: QSeries) -> QSeries:
    """Compositional inverse of f with f(0) = 0 and f'(0) != 0 (Newton).

    Raises
    ------
    NotInvertibleError
        If f(0) != 0 or f'(0) == 0.

    """
    if f.is_laurent or f.order < 1 or f[0] != 0 or f[1] == 0:
        msg = "Compositional inverse needs f(0) = 0 and f'(0) != 0"
        raise NotInvertibleError(msg)

    terms = f.order + 1
    outer = _poly(f.coefficients(0))
    outer_prime = outer.derivative()
    identity = fmpq_poly([0, 1])
    inverse = fmpq_poly([0, 1 / _to_fmpq(f[1])])
    known = 2
    while known < terms:
        known = min(2 * known, terms)
        residual = _compose_low(outer, inverse, known) - identity
        slope = _compose_low(outer_prime, inverse, known)
        inverse = _trunc(inverse - residual * _inv_low(slope, known), known)
        logger.debug("comp_inverse: %d terms certified", known)

    return QSeries(tuple(_coeff_list(inverse, terms)), f.order)


def comp_inverse_lagrange(f: QSeries) -> QSeries:
    """Compositional inverse by Lagrange inversion; quadratic cost oracle."""
    if f.is_laurent or f.order < 1 or f[0] != 0 or f[1] == 0:
        msg = "Compositional inverse needs f(0) = 0 and f'(0) != 0"
        raise NotInvertibleError(msg)

    order = f.order
    # [X^n] g = (1/n) [X^(n-1)] (X / f)^n
    unit = _poly(f.coefficients(1))
    ratio = _inv_low(unit, order)
    power = fmpq_poly([1])
    coeffs = [Fraction(0)]
    for n in range(1, order + 1):
        power = _trunc(power * ratio, order)
        coeffs.append(_coeff_list(power, n)[n - 1] / n)
    return QSeries(tuple(coeffs), order)


def reciprocal(f: QSeries) -> QSeries:
    """Return 1/f, allowing a simple pole in the input or the output.

    Raises
    ------
    ZeroLeadingCoefficientError
        If f vanishes to its known order.
    UnsupportedPoleOrderError
        If 1/f would have a pole of order two or more.

    """
    valuation = f.valuation
    if valuation > f.order:
        msg = "Series is zero to its known order"
        raise ZeroLeadingCoefficientError(msg)
    if valuation > 1:
        msg = f"1/f has a pole of order {valuation}"
        raise UnsupportedPoleOrderError(msg)

    terms = f.order - valuation + 1
    inverse = _coeff_list(_inv_low(_poly(f.coefficients(valuation)), terms), terms)
    order = f.order - 2 * valuation
    offset = -1 if valuation == 1 else 0
    coeffs = [
        inverse[n + valuation] if n >= -valuation else Fraction(0)
        for n in range(offset, order + 1)
    ]
    return QSeries(tuple(coeffs), order, offset)


def sqrt_one(f: QSeries) -> QSeries:
    """Square root with value 1 at 0 of a series with f(0) = 1.

    Raises
    ------
    BadConstantTermError
        If f(0) != 1.

    """
    if f.is_laurent or f.order < 0 or f[0] != 1:
        msg = "sqrt_one needs constant term 1"
        raise BadConstantTermError(msg)
    root = _sqrt_low(_poly(f.coefficients(0)), f.order + 1)
    return QSeries(tuple(_coeff_list(root, f.order + 1)), f.order)


def derivative(f: QSeries) -> QSeries:
    """Termwise derivative d/dX; the order drops by one."""
    if f.is_laurent:
        msg = "Derivative of a pole term needs a double pole"
        raise UnsupportedPoleOrderError(msg)
    order = f.order - 1
    coeffs = [(n + 1) * f[n + 1] for n in range(order + 1)]
    return QSeries(tuple(coeffs), max(order, -1))
