"""Module for certified series evaluation at archimedean and p-adic places."""

# * Creation : Oct 2026
# * License: MIT license

# %% --------------------------------------------
# * Libraries

from __future__ import annotations

import logging
import math
import random
from collections.abc import Iterator
from contextlib import contextmanager
from dataclasses import dataclass, field
from enum import StrEnum
from fractions import Fraction
from typing import Any

from flint import acb, arb, ctx, fmpq

from lib.series_core import QSeries, compose

# Set up logging
logger = logging.getLogger(__name__)

DEFAULT_BITS = 256

# %% --------------------------------------------
# * Exceptions


class NotInRadiusError(ValueError):
    """Raised when the evaluation point is outside the certified disc."""


class UncertifiedTailError(ValueError):
    """Raised when no tail bound is available for a non-integral series."""


# %% --------------------------------------------
# * Precision and conversion helpers


@contextmanager
def bit_precision(bits: int) -> Iterator[None]:
    """Run a block with flint's working precision set to ``bits``."""
    saved = ctx.prec
    ctx.prec = bits
    try:
        yield
    finally:
        ctx.prec = saved


def valuation(value: int | Fraction, prime: int) -> int:
    """p-adic valuation of a nonzero rational."""
    value = Fraction(value)
    if value == 0:
        msg = "Valuation of zero is infinite"
        raise ValueError(msg)
    count = 0
    numerator, denominator = value.numerator, value.denominator
    while numerator % prime == 0:
        numerator //= prime
        count += 1
    while denominator % prime == 0:
        denominator //= prime
        count -= 1
    return count


def fraction_ball(center: int | Fraction, radius: int | Fraction = 0) -> arb:
    """Real ball containing ``center`` widened by ``radius``."""
    center = Fraction(center)
    ball = arb(fmpq(center.numerator, center.denominator))
    if radius:
        radius = Fraction(radius)
        ball += arb(0, arb(fmpq(radius.numerator, radius.denominator)))
    return ball


def arb_to_fraction(value: arb) -> Fraction:
    """Exact value of a ball midpoint (or radius) as a binary rational."""
    mantissa, exponent = value.man_exp()
    return Fraction(int(mantissa)) * Fraction(2) ** int(exponent)


def arb_upper(value: arb) -> Fraction:
    """Exact rational upper bound of a real ball."""
    return arb_to_fraction(value.mid()) + arb_to_fraction(value.rad())


# %% --------------------------------------------
# * p-adic numbers


@dataclass(frozen=True)
class PadicNum:
    """A p-adic number p^valuation * mantissa known modulo p^(valuation+precision).

    Parameters
    ----------
    prime : int
        The prime p.
    valuation : int
        Valuation of the value (the absolute precision when the value is zero).
    mantissa : int
        Unit part reduced modulo p^precision; 0 for a certified zero.
    precision : int
        Relative precision in p-adic digits.

    """

    prime: int
    valuation: int
    mantissa: int
    precision: int

    @classmethod
    def from_rational(
        cls,
        value: int | Fraction,
        prime: int,
        absolute_precision: int,
    ) -> PadicNum:
        """Reduce an exact rational modulo p^absolute_precision."""
        value = Fraction(value)
        if value == 0:
            return cls.zero(prime, absolute_precision)
        order = valuation(value, prime)
        if order >= absolute_precision:
            return cls.zero(prime, absolute_precision)
        unit = value / Fraction(prime) ** order
        modulus = prime ** (absolute_precision - order)
        mantissa = unit.numerator * pow(unit.denominator, -1, modulus) % modulus
        return cls(prime, order, mantissa, absolute_precision - order)

    @classmethod
    def zero(cls, prime: int, absolute_precision: int) -> PadicNum:
        """Zero known modulo p^absolute_precision."""
        return cls(prime, absolute_precision, 0, 0)

    @property
    def absolute_precision(self) -> int:
        return self.valuation + self.precision

    def is_zero(self) -> bool:
        """True if the value is zero to its known precision."""
        return self.mantissa == 0

    def to_fraction(self) -> Fraction:
        """The stored representative as an exact rational."""
        return Fraction(self.prime) ** self.valuation * self.mantissa

    def _coerce(self, other: PadicNum | int | Fraction) -> PadicNum:
        if isinstance(other, PadicNum):
            if other.prime != self.prime:
                msg = f"Mixed primes {self.prime} and {other.prime}"
                raise ValueError(msg)
            return other
        other = Fraction(other)
        shift = valuation(other, self.prime) if other else 0
        return PadicNum.from_rational(
            other,
            self.prime,
            max(self.absolute_precision, shift + self.precision),
        )

    def __add__(self, other: PadicNum | int | Fraction) -> PadicNum:
        other = self._coerce(other)
        return PadicNum.from_rational(
            self.to_fraction() + other.to_fraction(),
            self.prime,
            min(self.absolute_precision, other.absolute_precision),
        )

    __radd__ = __add__

    def __neg__(self) -> PadicNum:
        return PadicNum.from_rational(
            -self.to_fraction(),
            self.prime,
            self.absolute_precision,
        )

    def __sub__(self, other: PadicNum | int | Fraction) -> PadicNum:
        return self + (-self._coerce(other))

    def __rsub__(self, other: int | Fraction) -> PadicNum:
        return self._coerce(other) - self

    def __mul__(self, other: PadicNum | int | Fraction) -> PadicNum:
        other = self._coerce(other)
        order = self.valuation + other.valuation
        return PadicNum.from_rational(
            self.to_fraction() * other.to_fraction(),
            self.prime,
            order + min(self.precision, other.precision),
        )

    __rmul__ = __mul__

    def __truediv__(self, other: PadicNum | int | Fraction) -> PadicNum:
        other = self._coerce(other)
        if other.is_zero():
            msg = "Division by a p-adic number that is zero to its precision"
            raise ZeroDivisionError(msg)
        order = self.valuation - other.valuation
        if self.is_zero():
            return PadicNum.zero(self.prime, order)
        return PadicNum.from_rational(
            self.to_fraction() / other.to_fraction(),
            self.prime,
            order + min(self.precision, other.precision),
        )

    def agrees_with(self, other: PadicNum) -> bool:
        """Equality modulo the smaller absolute precision."""
        return (self - other).is_zero()

    def __str__(self) -> str:
        return f"{self.to_fraction()} + O({self.prime}^{self.absolute_precision})"

    def to_json(self) -> dict[str, Any]:
        return {
            "prime": self.prime,
            "valuation": self.valuation,
            "mantissa": str(self.mantissa),
            "precision": self.precision,
        }


def padic_sqrt(
    value: int | Fraction,
    prime: int,
    absolute_precision: int,
) -> PadicNum | None:
    """Square root of a rational in Q_p, or None if it is not a square.

    For odd p the root whose leading digit lies in [1, (p-1)/2] is returned;
    for p = 2 the root congruent to 1 mod 4.
    """
    value = Fraction(value)
    if value == 0:
        return PadicNum.zero(prime, absolute_precision)
    order = valuation(value, prime)
    if order % 2:
        return None
    unit = value / Fraction(prime) ** order
    digits = max(absolute_precision - order // 2, 1)

    if prime == 2:
        modulus = 2 ** (digits + 2)
        residue = unit.numerator * pow(unit.denominator, -1, modulus) % modulus
        if residue % 8 != 1:
            return None
        root = 1
        for k in range(3, digits + 2):
            if (root * root - residue) % 2 ** (k + 1):
                root += 2 ** (k - 1)
        if root % 4 != 1:
            root = -root
        return PadicNum(2, order // 2, root % 2**digits, digits)

    modulus = prime**digits
    residue = unit.numerator * pow(unit.denominator, -1, modulus) % modulus
    start = next(
        (r for r in range(1, (prime + 1) // 2) if (r * r - residue) % prime == 0),
        None,
    )
    if start is None:
        return None
    root = start
    known = 1
    while known < digits:
        known = min(2 * known, digits)
        step = prime**known
        root = (root - (root * root - residue) * pow(2 * root, -1, step)) % step
    return PadicNum(prime, order // 2, root % modulus, digits)


# %% --------------------------------------------
# * Complex balls


@dataclass(frozen=True)
class ComplexBall:
    """Complex ball with exact binary-rational midpoint and radius.

    The radius bounds the error of each coordinate; arithmetic happens in flint
    ``acb`` with outward rounding and the result is converted back here.
    """

    real_mid: Fraction
    imag_mid: Fraction
    radius: Fraction
    certified: bool = True

    @classmethod
    def from_acb(cls, value: acb, *, certified: bool = True) -> ComplexBall:
        """Capture an ``acb`` ball exactly."""
        real, imag = value.real, value.imag
        return cls(
            arb_to_fraction(real.mid()),
            arb_to_fraction(imag.mid()),
            max(arb_to_fraction(real.rad()), arb_to_fraction(imag.rad())),
            certified,
        )

    @classmethod
    def exact(cls, real: int | Fraction, imag: int | Fraction = 0) -> ComplexBall:
        return cls(Fraction(real), Fraction(imag), Fraction(0))

    def to_acb(self) -> acb:
        """Rebuild the ball at the current working precision."""
        return acb(
            fraction_ball(self.real_mid, self.radius),
            fraction_ball(self.imag_mid, self.radius),
        )

    def contains(self, other: ComplexBall | acb | int | Fraction) -> bool:
        """True if ``other`` lies inside this ball."""
        return self.to_acb().contains(_as_acb(other))

    def overlaps(self, other: ComplexBall | acb | int | Fraction) -> bool:
        """True if the two enclosures intersect."""
        return self.to_acb().overlaps(_as_acb(other))

    def describe(self, digits: int = 30) -> str:
        """Decimal "mid±rad" text for reports."""
        with bit_precision(max(DEFAULT_BITS, 4 * digits)):
            real = arb(fmpq(self.real_mid.numerator, self.real_mid.denominator))
            imag = arb(fmpq(self.imag_mid.numerator, self.imag_mid.denominator))
            text = real.str(digits, radius=False)
            if self.imag_mid:
                sign = "-" if self.imag_mid < 0 else "+"
                text += f" {sign} {abs(imag).str(digits, radius=False)}j"
        radius = float(self.radius)
        return f"{text}±{radius:.3e}"

    def __str__(self) -> str:
        return self.describe()


def _as_acb(value: ComplexBall | acb | arb | int | Fraction) -> acb:
    if isinstance(value, ComplexBall):
        return value.to_acb()
    if isinstance(value, acb):
        return value
    if isinstance(value, arb):
        return acb(value)
    return acb(fraction_ball(value))


# %% --------------------------------------------
# * Radius bounds


class RadiusBasis(StrEnum):
    """Where a radius or coefficient bound comes from."""

    INTEGRAL_COEFFICIENTS = "integral_coefficients"
    SUPPLIED_BOUND = "supplied_bound"
    EMPIRICAL = "empirical"


@dataclass(frozen=True)
class RadiusBound:
    """Lower bound p^exponent for the radius R-dagger of a series at a prime.

    ``exponent`` is None when every known non-constant coefficient is zero
    (no constraint). ``lower`` is the rational p^floor(exponent).
    """

    prime: int
    exponent: Fraction | None
    certified: bool
    basis: RadiusBasis

    def __post_init__(self) -> None:
        """Enforce that empirical bounds are never certified."""
        if self.certified and self.basis == RadiusBasis.EMPIRICAL:
            msg = "Empirical radius bounds cannot be certified"
            raise ValueError(msg)

    @property
    def lower(self) -> Fraction | None:
        if self.exponent is None:
            return None
        return Fraction(self.prime) ** math.floor(self.exponent)


@dataclass(frozen=True)
class PadicCoefficientBound:
    """Supplied p-adic bound v_p(a_n) >= constant - slope * n for n >= 1."""

    constant: int = 0
    slope: Fraction = Fraction(0)


@dataclass(frozen=True)
class CoefficientBound:
    """Supplied archimedean bound |a_n| <= scale * radius^(-n).

    A zero ``scale`` marks a polynomial: coefficients above the known order vanish.
    """

    scale: Fraction
    radius: Fraction

    @classmethod
    def polynomial(cls) -> CoefficientBound:
        return cls(Fraction(0), Fraction(1))

    @classmethod
    def from_config(cls, entry: dict[str, Any]) -> CoefficientBound:
        return cls(Fraction(str(entry["scale"])), Fraction(str(entry["radius"])))


def r_dagger(
    f: QSeries,
    prime: int,
    bound: PadicCoefficientBound | None = None,
) -> RadiusBound:
    """Lower bound for R-dagger(f) = 1 / sup_{n>0} |a_n|_p^(1/n).

    The constant term is ignored. Coefficients that are p-integral give the
    certified bound 1; a supplied bound gives p^(-slope); otherwise the known
    prefix gives an empirical bound.
    """
    nonzero = [(n, f[n]) for n in range(1, f.order + 1) if f[n]]
    if not nonzero:
        return RadiusBound(prime, None, True, RadiusBasis.INTEGRAL_COEFFICIENTS)
    if bound is not None:
        exponent = -Fraction(bound.slope)
        return RadiusBound(prime, exponent, True, RadiusBasis.SUPPLIED_BOUND)
    if all(coeff.denominator % prime for _, coeff in nonzero):
        return RadiusBound(prime, Fraction(0), True, RadiusBasis.INTEGRAL_COEFFICIENTS)
    exponent = min(Fraction(valuation(coeff, prime), n) for n, coeff in nonzero)
    return RadiusBound(prime, exponent, False, RadiusBasis.EMPIRICAL)


# %% --------------------------------------------
# * Evaluation


def eval_padic(
    f: QSeries,
    x: PadicNum,
    target_precision: int,
    bound: PadicCoefficientBound | None = None,
) -> PadicNum:
    """Evaluate f at x with |x|_p < 1 modulo p^target_precision.

    The truncation at degree D contributes terms of valuation at least
    constant + (D+1)(v(x) - slope), so D is the least degree reaching the target.
    When the known order is too short the result carries the smaller precision
    that can be certified.

    Raises
    ------
    NotInRadiusError
        If v(x) <= 0 or v(x) does not exceed the supplied slope.
    UncertifiedTailError
        If f is not p-integral and no bound is supplied.

    """
    prime = x.prime
    if x.is_zero():
        return PadicNum.from_rational(f[0], prime, target_precision)
    if x.valuation <= 0:
        msg = f"Point of valuation {x.valuation} is outside the open unit disc"
        raise NotInRadiusError(msg)

    integral = all(c.denominator % prime for c in f.coefficients(1))
    if bound is None:
        if not integral:
            msg = "Series is not p-integral; supply a coefficient bound"
            raise UncertifiedTailError(msg)
        bound = PadicCoefficientBound()
    gain = x.valuation - Fraction(bound.slope)
    if gain <= 0:
        msg = f"Valuation {x.valuation} does not beat the coefficient slope"
        raise NotInRadiusError(msg)

    # least D with constant + (D+1)*gain >= target
    degree = max(math.ceil((target_precision - bound.constant) / gain) - 1, 0)
    if degree > f.order:
        degree = f.order
        logger.debug("eval_padic: order %d limits the certified precision", f.order)
    tail_precision = math.floor(bound.constant + (degree + 1) * gain)

    # perturbing x by p^A moves a_n x^n by at least v(a_n) + (n-1) v(x) + A
    point_precision = x.absolute_precision + min(
        (
            valuation(f[n], prime) + (n - 1) * x.valuation
            for n in range(1, degree + 1)
            if f[n]
        ),
        default=tail_precision,
    )
    precision = min(target_precision, tail_precision, point_precision)

    point = x.to_fraction()
    value = Fraction(0)
    for n in range(degree, -1, -1):
        value = value * point + f[n]
    return PadicNum.from_rational(value, prime, precision)


def _empirical_bound(f: QSeries) -> CoefficientBound:
    """Geometric bound fitted to the known coefficients, with a safety factor."""
    known = [(n, abs(f[n])) for n in range(1, f.order + 1) if f[n]]
    if not known:
        return CoefficientBound.polynomial()
    growth = max(
        math.exp((math.log(c.numerator) - math.log(c.denominator)) / n)
        for n, c in known
    )
    radius = Fraction(1) / Fraction(2 * growth).limit_denominator(10**6)
    scale = max(abs(f[0]), *(c * radius**n for n, c in known))
    return CoefficientBound(2 * Fraction(scale), radius)


def eval_complex(
    f: QSeries,
    x: ComplexBall | acb | int | Fraction,
    coeff_bound: CoefficientBound | None = None,
    bits: int = DEFAULT_BITS,
) -> ComplexBall:
    """Evaluate f at a complex ball with a geometric tail bound.

    Parameters
    ----------
    f : QSeries
        Power series to evaluate.
    x : ComplexBall, acb, int or Fraction
        Evaluation point.
    coeff_bound : CoefficientBound, optional
        Supplied bound |a_n| <= C * rho^(-n). Without it, integral series get an
        empirical bound and an uncertified result.
    bits : int, optional
        Working precision in bits, by default 256.

    Returns
    -------
    ComplexBall
        Ball containing the partial sum plus C (|x|/rho)^(D+1) / (1 - |x|/rho).

    Raises
    ------
    NotInRadiusError
        If |x| + radius is not below rho.
    UncertifiedTailError
        If f is not integral and no bound is supplied.

    """
    if f.is_laurent:
        msg = "eval_complex expects a power series"
        raise NotInRadiusError(msg)
    if isinstance(x, int | Fraction) and x == 0:
        return ComplexBall.exact(f[0])

    certified = True
    if coeff_bound is None:
        if not f.is_integral:
            msg = "Series is not integral; supply a coefficient bound"
            raise UncertifiedTailError(msg)
        coeff_bound = _empirical_bound(f)
        certified = False

    with bit_precision(bits):
        point = _as_acb(x)
        polynomial = coeff_bound.scale == 0
        ratio = abs(point).upper() / fraction_ball(coeff_bound.radius)
        if not polynomial and not ratio < 1:
            msg = f"|x| is not below the convergence radius {coeff_bound.radius}"
            raise NotInRadiusError(msg)

        degree = f.order
        if not polynomial:
            # smallest D whose geometric tail drops below 2^-bits
            ratio_estimate = float(arb_upper(ratio))
            margin = 1 - ratio_estimate
            if ratio_estimate > 0:
                needed = (
                    -bits * math.log(2)
                    - math.log(float(coeff_bound.scale) + 1e-300)
                    + math.log(margin)
                ) / math.log(ratio_estimate)
                degree = min(f.order, max(0, math.ceil(needed)))
            else:
                degree = 0

        value = acb(0)
        for n in range(degree, -1, -1):
            value = value * point + acb(fraction_ball(f[n]))

        if not polynomial:
            scale = fraction_ball(coeff_bound.scale)
            tail = (scale * ratio ** (degree + 1) / (1 - ratio)).upper()
            value += acb(arb(0, tail), arb(0, tail))
        if degree == f.order and not polynomial:
            logger.debug("eval_complex: used all known coefficients (order %d)", degree)
        return ComplexBall.from_acb(value, certified=certified)


# %% --------------------------------------------
# * Non-archimedean lemma checks


@dataclass(frozen=True)
class NonArchReport:
    """Outcome of the randomized p-adic lemma checks."""

    prime: int
    samples: int
    passed: int
    failed: int
    failures: tuple[str, ...] = field(default_factory=tuple)


def check_composition_instance(
    f: QSeries,
    g: QSeries,
    x: PadicNum,
    precision: int,
) -> tuple[bool, bool]:
    """Check the mean-value inequality for g and the two-path composition at x.

    Returns
    -------
    tuple[bool, bool]
        (|g(x) - g(0)| <= |x| / R-dagger(g), f(g(x)) == (f o g)(x)).

    """
    prime = x.prime
    g_at_x = eval_padic(g, x, precision)
    difference = g_at_x - g[0]
    radius = r_dagger(g, prime)
    exponent = radius.exponent if radius.exponent is not None else Fraction(0)
    if radius.exponent is None:
        mean_value_ok = difference.is_zero() or difference.valuation >= precision
    else:
        mean_value_ok = difference.valuation >= x.valuation + exponent

    direct = eval_padic(compose(f, g), x, precision)
    two_step = eval_padic(f, g_at_x, precision) if g[0] == 0 else direct
    return mean_value_ok, direct.agrees_with(two_step)


def check_nonarch_lemmas(
    prime: int,
    samples: int,
    seed: int,
    precision: int = 40,
    degree: int = 12,
) -> NonArchReport:
    """Randomized check of the mean-value inequality and two-path composition.

    Draws integral polynomials f, g with g(0) = 0 and points x with
    1 <= v(x) <= 3, then compares against ``check_composition_instance``.
    Failures are collected, never raised.
    """
    rng = random.Random(seed * 1_000_003 + prime)
    height = prime**3
    passed = 0
    failures: list[str] = []
    for sample in range(samples):
        f_coeffs = [rng.randint(-height, height) for _ in range(degree + 1)]
        g_coeffs = [0] + [rng.randint(-height, height) for _ in range(degree)]
        f = QSeries.from_coeffs(f_coeffs, precision)
        g = QSeries.from_coeffs(g_coeffs, precision)

        shift = rng.randint(1, 3)
        unit = rng.randrange(1, prime**precision)
        while unit % prime == 0:
            unit = rng.randrange(1, prime**precision)
        x = PadicNum.from_rational(prime**shift * unit, prime, precision + shift)

        try:
            mean_value_ok, composition_ok = check_composition_instance(
                f, g, x, precision
            )
        except (ArithmeticError, ValueError) as exc:
            failures.append(f"sample {sample}: {exc}")
            continue
        if mean_value_ok and composition_ok:
            passed += 1
        else:
            failures.append(
                f"sample {sample}: mean_value={mean_value_ok} "
                f"composition={composition_ok} v(x)={shift}",
            )

    if failures:
        logger.warning(
            "p=%d: %d of %d lemma samples failed", prime, len(failures), samples
        )
    return NonArchReport(prime, samples, passed, len(failures), tuple(failures))


# %% --------------------------------------------
# * Rational reconstruction


def continued_fraction(value: Fraction) -> list[int]:
    """Partial quotients [a0, a1, ...] of a rational."""
    numerator, denominator = value.numerator, value.denominator
    quotients = []
    while denominator:
        quotient = numerator // denominator
        quotients.append(quotient)
        numerator, denominator = denominator, numerator - quotient * denominator
    return quotients


def convergents(quotients: list[int]) -> Iterator[Fraction]:
    """Successive convergents of a continued fraction."""
    h_prev, h = 1, quotients[0] if quotients else 0
    k_prev, k = 0, 1
    if quotients:
        yield Fraction(h, k)
    for quotient in quotients[1:]:
        h_prev, h = h, quotient * h + h_prev
        k_prev, k = k, quotient * k + k_prev
        yield Fraction(h, k)


def rational_from_ball(
    ball: arb,
    denominator_bound: int = 10**12,
) -> Fraction | None:
    """Simplest convergent of the midpoint that lies inside a real ball.

    Returns None when no convergent with denominator <= ``denominator_bound``
    falls inside the ball.
    """
    if not ball.is_finite():
        return None
    center = arb_to_fraction(ball.mid())
    for candidate in convergents(continued_fraction(center)):
        if candidate.denominator > denominator_bound:
            break
        if ball.contains(fraction_ball(candidate)):
            return candidate
    return None
