"""Relation toolkit for G-functions: ODE guessing, relations, heights, divisors."""

# * Creation : Oct 2026
# * License: MIT license

# %% --------------------------------------------
# * Libraries

from __future__ import annotations

import logging
import math
import re
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from itertools import combinations_with_replacement
from typing import Any, TypeVar

import polars as pl
from flint import acb, arb, fmpq_mat, fmpz, fmpz_mat, fmpz_poly

from lib.place_eval import PadicNum, bit_precision, fraction_ball, padic_sqrt
from lib.series_core import QSeries, derivative, reciprocal

# Set up logging
logger = logging.getLogger(__name__)

T = TypeVar("T")

QUADRATIC_PATTERN = re.compile(
    r"^\s*(?P<rational>[-+]?\d+(?:/\d+)?)\s*(?P<sign>[-+])\s*"
    r"(?P<irrational>\d+(?:/\d+)?)\*sqrt\((?P<radicand>-?\d+)\)\s*$",
)

# %% --------------------------------------------
# * Exceptions


class InsufficientCoefficientsError(ValueError):
    """Raised when a series is too short for the requested linear system."""


class NotPrimitiveError(ValueError):
    """Raised when a minimal polynomial has a common coefficient factor."""


class SingularBranchError(ValueError):
    """Raised when the Y-derivative vanishes at the starting point."""


class NotHomogeneousError(ValueError):
    """Raised when relation monomials have different total degrees."""


# %% --------------------------------------------
# * Quadratic scalars


def squarefree_part(value: int) -> int:
    """Signed squarefree kernel of a nonzero integer."""
    if value == 0:
        msg = "Squarefree part of zero is undefined"
        raise ValueError(msg)
    kernel = 1
    for prime, exponent in fmpz(abs(value)).factor():
        if exponent % 2:
            kernel *= int(prime)
    return kernel if value > 0 else -kernel


@dataclass(frozen=True)
class QuadraticNumber:
    """Element rational + irrational * sqrt(radicand) of a quadratic field.

    ``radicand`` is a squarefree integer; it is normalized to 1 whenever the
    irrational part vanishes.
    """

    rational: Fraction
    irrational: Fraction = Fraction(0)
    radicand: int = 1

    def __post_init__(self) -> None:
        """Normalize to a squarefree radicand."""
        rational, irrational = Fraction(self.rational), Fraction(self.irrational)
        radicand = self.radicand
        if radicand == 0:
            irrational, radicand = Fraction(0), 1
        elif irrational:
            kernel = squarefree_part(radicand)
            irrational *= math.isqrt(radicand // kernel)
            radicand = kernel
        if radicand == 1:
            rational, irrational = rational + irrational, Fraction(0)
        if not irrational:
            radicand = 1
        object.__setattr__(self, "rational", rational)
        object.__setattr__(self, "irrational", irrational)
        object.__setattr__(self, "radicand", radicand)

    @classmethod
    def sqrt_of(cls, square: Fraction, sign: int = 1) -> QuadraticNumber:
        """Return sign * sqrt(square) written as y * sqrt(D), D squarefree."""
        square = Fraction(square)
        if square == 0:
            return cls(Fraction(0))
        product = square.numerator * square.denominator
        kernel = squarefree_part(product)
        cofactor = math.isqrt(product // kernel)
        return cls(Fraction(0), sign * Fraction(cofactor, square.denominator), kernel)

    @classmethod
    def parse(cls, text: str) -> QuadraticNumber:
        """Parse "r", or "r + y*sqrt(D)" as written by ``__str__``."""
        match = QUADRATIC_PATTERN.match(text)
        if match is None:
            return cls(Fraction(text.strip()))
        sign = -1 if match.group("sign") == "-" else 1
        return cls(
            Fraction(match.group("rational")),
            sign * Fraction(match.group("irrational")),
            int(match.group("radicand")),
        )

    @property
    def is_rational(self) -> bool:
        return self.irrational == 0

    def _lift(self, other: QuadraticNumber | int | Fraction) -> QuadraticNumber:
        if isinstance(other, QuadraticNumber):
            if not (
                other.is_rational
                or self.is_rational
                or other.radicand == self.radicand
            ):
                msg = f"Mixed radicands {self.radicand} and {other.radicand}"
                raise ValueError(msg)
            return other
        return QuadraticNumber(Fraction(other))

    def _radicand_with(self, other: QuadraticNumber) -> int:
        return self.radicand if not self.is_rational else other.radicand

    def __add__(self, other: QuadraticNumber | int | Fraction) -> QuadraticNumber:
        other = self._lift(other)
        return QuadraticNumber(
            self.rational + other.rational,
            self.irrational + other.irrational,
            self._radicand_with(other),
        )

    __radd__ = __add__

    def __neg__(self) -> QuadraticNumber:
        return QuadraticNumber(-self.rational, -self.irrational, self.radicand)

    def __sub__(self, other: QuadraticNumber | int | Fraction) -> QuadraticNumber:
        return self + (-self._lift(other))

    def __rsub__(self, other: int | Fraction) -> QuadraticNumber:
        return self._lift(other) - self

    def __mul__(self, other: QuadraticNumber | int | Fraction) -> QuadraticNumber:
        other = self._lift(other)
        radicand = self._radicand_with(other)
        return QuadraticNumber(
            self.rational * other.rational
            + self.irrational * other.irrational * radicand,
            self.rational * other.irrational + self.irrational * other.rational,
            radicand,
        )

    __rmul__ = __mul__

    def conjugate(self) -> QuadraticNumber:
        return QuadraticNumber(self.rational, -self.irrational, self.radicand)

    def norm(self) -> Fraction:
        return self.rational**2 - self.irrational**2 * self.radicand

    def __truediv__(self, other: QuadraticNumber | int | Fraction) -> QuadraticNumber:
        other = self._lift(other)
        norm = other.norm()
        if norm == 0:
            msg = "Division by zero in a quadratic field"
            raise ZeroDivisionError(msg)
        return self * other.conjugate() * QuadraticNumber(1 / norm)

    def __rtruediv__(self, other: int | Fraction) -> QuadraticNumber:
        return self._lift(other) / self

    def __bool__(self) -> bool:
        return bool(self.rational or self.irrational)

    def simplify(self) -> QuadraticNumber | Fraction:
        """Return a plain Fraction when the value is rational."""
        return self.rational if self.is_rational else self

    def to_acb(self) -> acb:
        """Ball enclosure at the current working precision."""
        root = acb(self.radicand).sqrt()
        rational = acb(fraction_ball(self.rational))
        return rational + acb(fraction_ball(self.irrational)) * root

    def to_padic(self, prime: int, absolute_precision: int) -> PadicNum | None:
        """Image in Q_p under the canonical root; None if sqrt(D) is not in Q_p."""
        rational = PadicNum.from_rational(self.rational, prime, absolute_precision)
        if self.is_rational:
            return rational
        root = padic_sqrt(self.radicand, prime, absolute_precision + 2)
        if root is None:
            return None
        return rational + root * self.irrational

    def __str__(self) -> str:
        if self.is_rational:
            return str(self.rational)
        sign = "-" if self.irrational < 0 else "+"
        return f"{self.rational} {sign} {abs(self.irrational)}*sqrt({self.radicand})"


Coefficient = Fraction | QuadraticNumber


def _normalize_scalar(value: Coefficient | int) -> Coefficient:
    if isinstance(value, QuadraticNumber):
        return value.simplify()
    return Fraction(value)


def format_scalar(value: Coefficient) -> str:
    return str(value)


def parse_scalar(text: str) -> Coefficient:
    return _normalize_scalar(QuadraticNumber.parse(text))


# %% --------------------------------------------
# * Relation polynomials


Monomial = tuple[int, ...]


@dataclass(frozen=True)
class RelationPoly:
    """Homogeneous polynomial in named variables with X-polynomial coefficients.

    ``terms`` maps an exponent tuple (one entry per variable) to the coefficient
    polynomial in X, listed from the constant term upwards. Point relations
    have constant coefficients (one entry per tuple).
    """

    variables: tuple[str, ...]
    terms: Mapping[Monomial, tuple[Coefficient, ...]] = field(default_factory=dict)
    confirmed: bool = True

    def __post_init__(self) -> None:
        """Drop zero terms and enforce homogeneity."""
        cleaned: dict[Monomial, tuple[Coefficient, ...]] = {}
        for monomial, coeffs in self.terms.items():
            if len(monomial) != len(self.variables):
                msg = f"Monomial {monomial} does not match {self.variables}"
                raise ValueError(msg)
            values = [_normalize_scalar(c) for c in coeffs]
            while values and not values[-1]:
                values.pop()
            if values:
                cleaned[tuple(monomial)] = tuple(values)
        degrees = {sum(monomial) for monomial in cleaned}
        if len(degrees) > 1:
            msg = f"Monomials of different degrees {sorted(degrees)}"
            raise NotHomogeneousError(msg)
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "terms", dict(sorted(cleaned.items(), reverse=True)))

    @classmethod
    def from_constants(
        cls,
        variables: Sequence[str],
        terms: Mapping[Monomial, Coefficient | int],
    ) -> RelationPoly:
        """Build a point relation from constant coefficients."""
        return cls(tuple(variables), {m: (c,) for m, c in terms.items()})

    @classmethod
    def linear(
        cls,
        variables: Sequence[str],
        coeffs: Sequence[Coefficient | int],
    ) -> RelationPoly:
        """Linear form sum coeffs[i] * variables[i]."""
        size = len(variables)
        terms = {
            tuple(int(i == k) for i in range(size)): (c,)
            for k, c in enumerate(coeffs)
        }
        return cls(tuple(variables), terms)

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def degree(self) -> int:
        """Homogeneous degree; -1 for the zero polynomial."""
        return sum(next(iter(self.terms))) if self.terms else -1

    @property
    def xdegree(self) -> int:
        return max((len(c) - 1 for c in self.terms.values()), default=-1)

    def coefficient(self, monomial: Monomial) -> Coefficient:
        """Constant coefficient of a monomial (0 if absent)."""
        coeffs = self.terms.get(tuple(monomial), ())
        return coeffs[0] if coeffs else Fraction(0)

    def leading_monomial(self) -> Monomial | None:
        """Largest monomial in lexicographic order, None for zero."""
        return max(self.terms) if self.terms else None

    def _combine(self, other: RelationPoly, sign: int) -> RelationPoly:
        if other.variables != self.variables:
            msg = f"Variables differ: {self.variables} vs {other.variables}"
            raise ValueError(msg)
        terms: dict[Monomial, list[Coefficient]] = {
            m: list(c) for m, c in self.terms.items()
        }
        for monomial, coeffs in other.terms.items():
            current = terms.setdefault(monomial, [])
            current.extend([Fraction(0)] * (len(coeffs) - len(current)))
            for k, c in enumerate(coeffs):
                current[k] = current[k] + sign * c
        return RelationPoly(self.variables, {m: tuple(c) for m, c in terms.items()})

    def __add__(self, other: RelationPoly) -> RelationPoly:
        return self._combine(other, 1)

    def __sub__(self, other: RelationPoly) -> RelationPoly:
        return self._combine(other, -1)

    def __mul__(self, other: RelationPoly | Coefficient | int) -> RelationPoly:
        if not isinstance(other, RelationPoly):
            scalar = _normalize_scalar(other)
            return RelationPoly(
                self.variables,
                {m: tuple(scalar * c for c in cs) for m, cs in self.terms.items()},
            )
        if other.variables != self.variables:
            msg = f"Variables differ: {self.variables} vs {other.variables}"
            raise ValueError(msg)
        product: dict[Monomial, list[Coefficient]] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                monomial = tuple(a + b for a, b in zip(m1, m2, strict=True))
                current = product.setdefault(monomial, [])
                needed = len(c1) + len(c2) - 1
                current.extend([Fraction(0)] * (needed - len(current)))
                for i, a in enumerate(c1):
                    for j, b in enumerate(c2):
                        current[i + j] = current[i + j] + a * b
        return RelationPoly(self.variables, {m: tuple(c) for m, c in product.items()})

    __rmul__ = __mul__

    def substitute(self, mapping: Mapping[str, str]) -> RelationPoly:
        """Rename variables (e.g. Y1 -> Y3), merging the resulting monomials."""
        index = {name: k for k, name in enumerate(self.variables)}
        result = RelationPoly(self.variables)
        for monomial, coeffs in self.terms.items():
            exponents = [0] * len(self.variables)
            for name, exponent in zip(self.variables, monomial, strict=True):
                exponents[index[mapping.get(name, name)]] += exponent
            result = result + RelationPoly(self.variables, {tuple(exponents): coeffs})
        return result

    def specialize(self, xi: Fraction) -> RelationPoly:
        """Evaluate every X-polynomial coefficient at X = xi."""
        xi = Fraction(xi)
        terms = {
            m: (sum((c * xi**k for k, c in enumerate(cs)), Fraction(0)),)
            for m, cs in self.terms.items()
        }
        return RelationPoly(self.variables, terms, self.confirmed)

    def evaluate(
        self,
        values: Sequence[T],
        convert: Callable[[Coefficient], T],
    ) -> T:
        """Evaluate a point relation at ``values`` in the ring of ``convert``."""
        if self.xdegree > 0:
            msg = "Specialize the X-coefficients before evaluating at a point"
            raise ValueError(msg)
        total = None
        for monomial, coeffs in self.terms.items():
            term = convert(coeffs[0])
            for value, exponent in zip(values, monomial, strict=True):
                for _ in range(exponent):
                    term = term * value
            total = term if total is None else total + term
        return total if total is not None else convert(Fraction(0))

    def evaluate_series(self, series: Sequence[QSeries]) -> QSeries:
        """Substitute series for the variables (X-coefficients become series)."""
        order = min(s.order for s in series)
        total = QSeries.zero(order)
        for monomial, coeffs in self.terms.items():
            term = QSeries.from_coeffs([_require_rational(c) for c in coeffs], order)
            for value, exponent in zip(series, monomial, strict=True):
                for _ in range(exponent):
                    term = term * value
            total = total + term
        return total

    def to_dict(self) -> dict[str, Any]:
        """JSON form with string coefficients."""
        terms = []
        for monomial, coeffs in self.terms.items():
            entry: dict[str, Any] = {"monomial": list(monomial)}
            if len(coeffs) == 1:
                entry["coefficient"] = format_scalar(coeffs[0])
            else:
                entry["coefficients"] = [format_scalar(c) for c in coeffs]
            terms.append(entry)
        return {
            "variables": list(self.variables),
            "degree": self.degree,
            "confirmed": self.confirmed,
            "terms": terms,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> RelationPoly:
        terms = {}
        for entry in data["terms"]:
            raw = entry.get("coefficients", [entry.get("coefficient", "0")])
            terms[tuple(entry["monomial"])] = tuple(parse_scalar(c) for c in raw)
        return cls(tuple(data["variables"]), terms, data.get("confirmed", True))

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for monomial, coeffs in self.terms.items():
            names = "*".join(
                name if e == 1 else f"{name}^{e}"
                for name, e in zip(self.variables, monomial, strict=True)
                if e
            )
            poly = " + ".join(
                f"{c}" if k == 0 else f"{c}*X^{k}" for k, c in enumerate(coeffs) if c
            )
            parts.append(f"({poly})*{names}" if names else f"({poly})")
        return " + ".join(parts)


def _require_rational(value: Coefficient) -> Fraction:
    if isinstance(value, QuadraticNumber):
        msg = "Series evaluation needs rational coefficients"
        raise TypeError(msg)
    return value


# %% --------------------------------------------
# * Exact linear algebra


def rational_nullspace(
    rows: Sequence[Sequence[Fraction]],
    columns: int,
) -> list[list[Fraction]]:
    """Basis of the right nullspace of a rational matrix, in reduced echelon form."""
    if not rows:
        return [[Fraction(int(i == k)) for i in range(columns)] for k in range(columns)]
    integer_rows = []
    for row in rows:
        scale = reduce(math.lcm, (Fraction(v).denominator for v in row), 1)
        integer_rows.append([int(Fraction(v) * scale) for v in row])
    kernel, nullity = fmpz_mat(integer_rows).nullspace()
    if nullity == 0:
        return []
    basis = fmpq_mat(
        nullity,
        columns,
        [kernel[i, k] for k in range(nullity) for i in range(columns)],
    )
    reduced, rank = basis.rref()
    return [
        [Fraction(int(reduced[r, c].p), int(reduced[r, c].q)) for c in range(columns)]
        for r in range(rank)
    ]


def primitive_integer_vector(vector: Sequence[Fraction]) -> list[Fraction]:
    """Scale to coprime integers with a positive last nonzero entry."""
    scale = reduce(math.lcm, (v.denominator for v in vector), 1)
    integers = [int(v * scale) for v in vector]
    divisor = reduce(math.gcd, integers, 0) or 1
    last = next((v for v in reversed(integers) if v), 1)
    sign = 1 if last > 0 else -1
    return [Fraction(sign * v // divisor) for v in integers]


# %% --------------------------------------------
# * Linear ODE guessing


@dataclass(frozen=True)
class LinearODE:
    """Operator sum_i gamma_i(X) (d/dX)^i with polynomial coefficients.

    ``coefficients[i]`` lists gamma_i from the constant term upwards.
    """

    order: int
    degree: int
    coefficients: tuple[tuple[Fraction, ...], ...]
    held_out: int = 0

    def apply(self, f: QSeries) -> QSeries:
        """Return L(f), known to order(f) - order."""
        result_order = f.order - self.order
        total = QSeries.zero(result_order)
        derivative_series = f
        for i, gamma in enumerate(self.coefficients):
            if i:
                derivative_series = derivative(derivative_series)
            total = total + QSeries.from_coeffs(gamma, result_order) * derivative_series
        return total.truncate(result_order)

    def annihilates(self, f: QSeries) -> bool:
        return all(c == 0 for c in self.apply(f).coeffs)

    def __str__(self) -> str:
        parts = []
        for i, gamma in enumerate(self.coefficients):
            poly = " + ".join(
                f"{c}" if k == 0 else f"{c}*X^{k}" for k, c in enumerate(gamma) if c
            )
            if poly:
                parts.append(f"({poly})*D^{i}" if i else f"({poly})")
        return " + ".join(parts) or "0"


def _dot(row: Sequence[Fraction], vector: Sequence[Fraction]) -> Fraction:
    return sum((a * b for a, b in zip(row, vector, strict=True)), Fraction(0))


def _ode_row(f: QSeries, k: int, order: int, degree: int) -> list[Fraction]:
    """Coefficient of X^k in L(f) as a linear form in the unknowns c_(i,e)."""
    row = []
    for i in range(order + 1):
        for e in range(degree + 1):
            m = k - e
            if m < 0:
                row.append(Fraction(0))
                continue
            # [X^m] f^(i) = (m+1)...(m+i) f_(m+i)
            falling = math.prod(range(m + 1, m + i + 1))
            row.append(falling * f[m + i])
    return row


def find_ode(
    f: QSeries,
    max_order: int,
    max_degree: int,
    margin: int = 20,
    min_held_out: int = 50,
) -> LinearODE | None:
    """Find a minimal (order, then degree) linear ODE annihilating f.

    The nullspace is computed from the first unknowns + margin coefficient
    rows; every later row is held out and must vanish as well.

    Raises
    ------
    InsufficientCoefficientsError
        If f is too short to leave ``min_held_out`` verification rows.

    """
    needed = (max_order + 1) * (max_degree + 1) + max_order + margin + min_held_out
    if f.order + 1 < needed:
        msg = f"find_ode needs {needed} coefficients, series has {f.order + 1}"
        raise InsufficientCoefficientsError(msg)

    for order in range(1, max_order + 1):
        for degree in range(max_degree + 1):
            unknowns = (order + 1) * (degree + 1)
            used = unknowns + margin
            total_rows = f.order - order + 1
            rows = [_ode_row(f, k, order, degree) for k in range(total_rows)]
            held = rows[used:]
            for vector in rational_nullspace(rows[:used], unknowns):
                if any(_dot(row, vector) for row in held):
                    logger.debug(
                        "find_ode: (%d, %d) failed held-out rows", order, degree
                    )
                    continue
                normalized = _normalize_operator(vector, order, degree)
                if not any(normalized[-1]):
                    continue
                logger.debug("find_ode: operator of order %d, degree %d", order, degree)
                return LinearODE(order, degree, normalized, total_rows - used)
    return None


def _normalize_operator(
    vector: Sequence[Fraction],
    order: int,
    degree: int,
) -> tuple[tuple[Fraction, ...], ...]:
    """Primitive integer coefficients, leading coefficient of gamma_mu positive."""
    integers = primitive_integer_vector(vector)
    gammas = [
        tuple(integers[i * (degree + 1) : (i + 1) * (degree + 1)])
        for i in range(order + 1)
    ]
    leading = next((c for c in reversed(gammas[-1]) if c), Fraction(1))
    if leading < 0:
        gammas = [tuple(-c for c in gamma) for gamma in gammas]
    return tuple(gammas)


# %% --------------------------------------------
# * Functional relations


def homogeneous_monomials(count: int, degree: int) -> list[Monomial]:
    """All exponent tuples of total degree ``degree`` in ``count`` variables."""
    monomials = []
    for combo in combinations_with_replacement(range(count), degree):
        exponents = [0] * count
        for index in combo:
            exponents[index] += 1
        monomials.append(tuple(exponents))
    return sorted(monomials, reverse=True)


def find_functional_relations(
    series: Sequence[QSeries],
    delta: int,
    xdeg: int,
    margin: int = 20,
) -> list[RelationPoly]:
    """Basis of homogeneous degree-delta relations with X-degree <= xdeg.

    Every coefficient of X^k up to the common order gives one equation; the
    returned relations annihilate the truncations to that order. They are
    flagged unconfirmed when fewer than ``margin`` surplus equations exist.

    Raises
    ------
    InsufficientCoefficientsError
        If there are fewer equations than unknowns.

    """
    variables = tuple(f"Y{k + 1}" for k in range(len(series)))
    monomials = homogeneous_monomials(len(series), delta)
    order = min(s.order for s in series)
    products = []
    for monomial in monomials:
        product = QSeries.one(order)
        for value, exponent in zip(series, monomial, strict=True):
            for _ in range(exponent):
                product = product * value
        products.append(product)

    unknowns = len(monomials) * (xdeg + 1)
    if order + 1 < unknowns:
        msg = f"{unknowns} unknowns but only {order + 1} coefficients"
        raise InsufficientCoefficientsError(msg)
    confirmed = order + 1 >= unknowns + margin

    rows = [
        [
            product[k - e] if k >= e else Fraction(0)
            for product in products
            for e in range(xdeg + 1)
        ]
        for k in range(order + 1)
    ]
    relations = []
    for vector in rational_nullspace(rows, unknowns):
        integers = primitive_integer_vector(vector)
        terms = {
            monomial: tuple(integers[j * (xdeg + 1) : (j + 1) * (xdeg + 1)])
            for j, monomial in enumerate(monomials)
        }
        relations.append(RelationPoly(variables, terms, confirmed))
    if relations and not confirmed:
        logger.warning("Relations found with fewer than %d surplus equations", margin)
    return relations


def specialize_relation(rel: RelationPoly, xi: Fraction) -> tuple[RelationPoly, bool]:
    """Specialize X = xi; unsafe when the leading X-coefficient vanishes at xi."""
    specialized = rel.specialize(xi)
    leading = rel.leading_monomial()
    if leading is None or specialized.is_zero:
        return specialized, False
    gamma = rel.terms[leading]
    value = sum((c * Fraction(xi) ** k for k, c in enumerate(gamma)), Fraction(0))
    return specialized, value != 0


# %% --------------------------------------------
# * Heights and divisors


def weil_height(
    value: int | Fraction | Sequence[int],
    bits: int = 128,
    tolerance: Fraction = Fraction(1, 10**12),
) -> arb:
    """Logarithmic Weil height of a rational or of a root of a minimal polynomial.

    Parameters
    ----------
    value : int, Fraction or sequence of int
        A rational, or integer coefficients c0, c1, ..., cd of the minimal
        polynomial (lowest degree first).
    bits : int, optional
        Starting working precision; doubled until the ball is narrower than
        ``tolerance``.

    Returns
    -------
    arb
        Ball containing (1/d) (log|c_d| + sum log+ |x_i|).

    Raises
    ------
    NotPrimitiveError
        If the coefficients share a common factor.

    """
    if isinstance(value, int | Fraction):
        rational = Fraction(value)
        with bit_precision(bits):
            return arb(max(abs(rational.numerator), rational.denominator)).log()

    coeffs = [int(c) for c in value]
    while coeffs and coeffs[-1] == 0:
        coeffs.pop()
    if len(coeffs) < 2:
        msg = "Minimal polynomial must have degree at least 1"
        raise ValueError(msg)
    if reduce(math.gcd, coeffs, 0) != 1:
        msg = f"Minimal polynomial {coeffs} is not primitive"
        raise NotPrimitiveError(msg)

    degree = len(coeffs) - 1
    while True:
        with bit_precision(bits):
            measure = arb(abs(coeffs[-1])).log()
            for root, multiplicity in fmpz_poly(coeffs).complex_roots():
                modulus = abs(root)
                if modulus > 1:
                    contribution = modulus.log()
                elif modulus < 1:
                    contribution = arb(0)
                else:
                    contribution = arb(0).union(modulus.log())
                measure += multiplicity * contribution
            height = measure / degree
            if height.rad() < fraction_ball(tolerance) or bits >= 4096:
                return height
        bits *= 2
        logger.debug("weil_height: retrying at %d bits", bits)


def divisor_count(number: int) -> int:
    """Number of positive divisors, from the prime factorization."""
    if number < 1:
        msg = f"divisor_count needs a positive integer, got {number}"
        raise ValueError(msg)
    return math.prod(int(exponent) + 1 for _, exponent in fmpz(number).factor())


@dataclass(frozen=True)
class DivisorBoundReport:
    """Maximum of d(N) / N^eps over 1 <= N <= n_max."""

    eps: float
    n_max: int
    max_ratio: float
    argmax: int
    divisors_at_argmax: int


def divisor_table(n_max: int) -> pl.DataFrame:
    """Table of (N, d(N)) for 1 <= N <= n_max built from divisor multiples."""
    return (
        pl.DataFrame({"d": pl.int_range(1, n_max + 1, eager=True)})
        .select(pl.int_ranges(pl.col("d"), n_max + 1, pl.col("d")).alias("N"))
        .explode("N")
        .group_by("N")
        .len(name="divisors")
        .sort("N")
    )


def check_divisor_bound(eps: float, n_max: int) -> DivisorBoundReport:
    """Scan d(N)/N^eps for N <= n_max and report the maximum and its argument."""
    table = divisor_table(n_max).with_columns(
        (pl.col("divisors") / pl.col("N").cast(pl.Float64).pow(eps)).alias("ratio"),
    )
    best = table.sort(["ratio", "N"], descending=[True, False]).row(0, named=True)
    return DivisorBoundReport(
        eps,
        n_max,
        float(best["ratio"]),
        int(best["N"]),
        int(best["divisors"]),
    )


# %% --------------------------------------------
# * Algebraic branches


@dataclass(frozen=True)
class HenselResult:
    """Series branch of P(X, y) = 0 with its denominator profile."""

    series: QSeries
    denominators: tuple[int, ...]
    growth: float


def _evaluate_bivariate(
    poly: Mapping[tuple[int, int], int],
    y: QSeries,
    order: int,
) -> QSeries:
    """P(X, y(X)) for P given as {(i, j): c} meaning c X^i Y^j."""
    total = QSeries.zero(order)
    for (i, j), coeff in poly.items():
        term = QSeries.from_coeffs([0] * i + [coeff], order)
        for _ in range(j):
            term = term * y
        total = total + term
    return total


def hensel_series(
    poly: Mapping[tuple[int, int], int],
    y0: Fraction,
    order: int,
) -> HenselResult:
    """Power series root y(X) of P(X, y) = 0 with y(0) = y0 (Newton on series).

    Raises
    ------
    SingularBranchError
        If dP/dY vanishes at (0, y0).

    """
    y0 = Fraction(y0)
    value_at_origin = sum(
        (c * y0**j for (i, j), c in poly.items() if i == 0),
        Fraction(0),
    )
    if value_at_origin != 0:
        msg = f"P(0, {y0}) = {value_at_origin} is not zero"
        raise ValueError(msg)
    partial = {(i, j - 1): j * c for (i, j), c in poly.items() if j > 0}
    slope_at_origin = sum(
        (c * y0**j for (i, j), c in partial.items() if i == 0),
        Fraction(0),
    )
    if slope_at_origin == 0:
        msg = f"dP/dY vanishes at (0, {y0})"
        raise SingularBranchError(msg)

    y = QSeries.from_coeffs([y0], order)
    known = 1
    while known <= order:
        known = min(2 * known, order + 1)
        value = _evaluate_bivariate(poly, y, order)
        slope = _evaluate_bivariate(partial, y, order)
        y = (y - value * reciprocal(slope)).truncate(order)

    denominators = []
    running = 1
    for n in range(1, order + 1):
        running = math.lcm(running, y[n].denominator)
        denominators.append(running)
    growth = max(
        (math.exp(math.log(d) / n) for n, d in enumerate(denominators, start=1)),
        default=1.0,
    )
    return HenselResult(y, tuple(denominators), growth)


# %% --------------------------------------------
# * Scalar conversions used by evaluators


def scalar_to_acb(value: Coefficient) -> acb:
    if isinstance(value, QuadraticNumber):
        return value.to_acb()
    return acb(fraction_ball(value))


def scalar_to_padic(prime: int, precision: int) -> Callable[[Coefficient], PadicNum]:
    """Converter into Q_p for ``RelationPoly.evaluate``."""

    def convert(value: Coefficient) -> PadicNum:
        if isinstance(value, QuadraticNumber):
            image = value.to_padic(prime, precision)
            if image is None:
                msg = f"sqrt({value.radicand}) is not in Q_{prime}"
                raise ValueError(msg)
            return image
        return PadicNum.from_rational(value, prime, precision)

    return convert
