"""Module computing period matrices of the 1/j curve family with ball arithmetic.

The curve E_s is y^2 + xy = x^3 - (36s/D) x - s/D with D = 1 - 1728s, so that
c4 = 1/D, c6 = -1/D and j = 1/s. Its short model is Y^2 = 4X^3 - g2 X - g3 with
X = x + 1/12, Y = 2y + x, g2 = c4/12, g3 = c6/216; then omega = dX/Y and
eta = X dX/Y. Periods are normalized by 1/(2 pi i).
"""

# * Creation : Oct 2026
# * License: MIT license

# %% --------------------------------------------
# * Libraries

from __future__ import annotations

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, TypeVar

from flint import acb, arb, fmpq, fmpq_poly

from lib.gfunction_tools import rational_nullspace
from lib.modular_qexp import EISENSTEIN_FACTORS, divisor_sums
from lib.place_eval import (
    DEFAULT_BITS,
    ComplexBall,
    arb_to_fraction,
    arb_upper,
    bit_precision,
    fraction_ball,
    rational_from_ball,
)
from lib.series_core import QSeries, derivative, reciprocal

# Set up logging
logger = logging.getLogger(__name__)

T = TypeVar("T")

# largest k/2^16 certified by compute_delta_s_radius
DEFAULT_DELTA_S_RADIUS = Fraction(37, 65536)
FALLBACK_DELTA_S_RADIUS = Fraction(1, 2000)

# rational point just inside |q| = e^(-2 pi), used to bracket the bisection
Q_EDGE = Fraction(1, 536)

# sigma_k(n) <= constant * n^exponent
SIGMA_BOUNDS = {
    1: (Fraction(1), 2),
    3: (Fraction(121, 100), 3),
    5: (Fraction(104, 100), 5),
}

MAX_EISENSTEIN_TERMS = 100_000
MAX_BITS = 4096
LATTICE_SEARCH = 3

# %% --------------------------------------------
# * Exceptions


class NotInDeltaSError(ValueError):
    """Raised when a parameter lies outside the certified disc Delta_S."""


class BadCurveParameterError(ValueError):
    """Raised for s = 0 or s = 1/1728, where E_s degenerates."""


class PrecisionExhaustedError(ArithmeticError):
    """Raised when balls are too wide to separate candidates."""


class PeriodMismatchError(ArithmeticError):
    """Raised when the lattice and series paths disagree."""


class ReconstructionFailedError(ArithmeticError):
    """Raised when a rational function cannot be recovered within the budget."""


# %% --------------------------------------------
# * Curves


@dataclass(frozen=True)
class CurvePoint:
    """Parameter s of the curve E_s with j(E_s) = 1/s."""

    s: Fraction

    def __post_init__(self) -> None:
        """Reject the degenerate parameters."""
        s = Fraction(self.s)
        if s in (0, Fraction(1, 1728)):
            msg = f"E_s is singular or undefined at s = {s}"
            raise BadCurveParameterError(msg)
        object.__setattr__(self, "s", s)

    @property
    def j(self) -> Fraction:
        return 1 / self.s

    @property
    def discriminant_factor(self) -> Fraction:
        """D = 1 - 1728 s."""
        return 1 - 1728 * self.s

    @property
    def discriminant(self) -> Fraction:
        """g2^3 - 27 g3^2 = s / D^3."""
        return self.g2**3 - 27 * self.g3**2

    @property
    def a4(self) -> Fraction:
        return -36 * self.s / self.discriminant_factor

    @property
    def a6(self) -> Fraction:
        return -self.s / self.discriminant_factor

    @property
    def c4(self) -> Fraction:
        return 1 / self.discriminant_factor

    @property
    def c6(self) -> Fraction:
        return -1 / self.discriminant_factor

    @property
    def g2(self) -> Fraction:
        return self.c4 / 12

    @property
    def g3(self) -> Fraction:
        return self.c6 / 216

    @property
    def weierstrass(self) -> str:
        return f"y^2 + x*y = x^3 + ({self.a4})*x + ({self.a6})"

    def short_cubic(self) -> fmpq_poly:
        """4X^3 - g2 X - g3."""
        return fmpq_poly([_fmpq(-self.g3), _fmpq(-self.g2), 0, 4])


def _fmpq(value: Fraction) -> fmpq:
    return fmpq(value.numerator, value.denominator)


def two_pi_i() -> acb:
    return acb(0, 2 * arb.pi())


def escalate_bits(
    attempt: Callable[[int], T | None],
    bits: int,
    max_bits: int = MAX_BITS,
    what: str = "computation",
) -> tuple[int, T]:
    """Run ``attempt`` at bits, 2 bits, ... until it returns a verdict.

    ``attempt`` returns None when its balls are too wide to decide.

    Returns
    -------
    tuple[int, T]
        The precision that decided and the verdict.

    Raises
    ------
    PrecisionExhaustedError
        If the attempt is still undecided at ``max_bits``.

    """
    current = bits
    while True:
        result = attempt(current)
        if result is not None:
            return current, result
        if 2 * current > max_bits:
            msg = f"{what} still undecided at {current} bits (cap {max_bits})"
            raise PrecisionExhaustedError(msg)
        current *= 2
        logger.debug("%s undecided; retrying at %d bits", what, current)


# %% --------------------------------------------
# * Eisenstein series at a ball


def _tail_terms(k: int, modulus: float, bits: int) -> int:
    """Least N whose geometric tail bound is below 2^-bits."""
    constant, exponent = SIGMA_BOUNDS[k]
    target = -bits * math.log(2)
    log_modulus = math.log(modulus)
    for terms in range(1, MAX_EISENSTEIN_TERMS):
        ratio = ((terms + 2) / (terms + 1)) ** exponent * modulus
        if ratio >= 1:
            continue
        log_tail = (
            math.log(float(constant))
            + exponent * math.log(terms + 1)
            + (terms + 1) * log_modulus
            - math.log(1 - ratio)
        )
        if log_tail < target:
            return terms
    msg = f"|q| = {modulus} needs more than {MAX_EISENSTEIN_TERMS} terms"
    raise PrecisionExhaustedError(msg)


def _tail_bound(k: int, modulus: arb, terms: int) -> arb:
    """Bound for sum_{n > terms} sigma_k(n) |q|^n."""
    constant, exponent = SIGMA_BOUNDS[k]
    ratio = arb(terms + 2) ** exponent / arb(terms + 1) ** exponent * modulus
    first = fraction_ball(constant) * arb(terms + 1) ** exponent
    first *= modulus ** (terms + 1)
    return (first / (1 - ratio)).upper()


def eisenstein_ball(which: str, q: acb, bits: int = DEFAULT_BITS) -> acb:
    """Evaluate E2, E4 or E6 at a complex ball q with |q| < 1.

    The partial sum is enlarged by C (N+1)^e |q|^(N+1) / (1 - rho), where
    sigma_k(n) <= C n^e and rho bounds the ratio of consecutive tail terms.
    """
    k, factor = EISENSTEIN_FACTORS[which]
    if q == 0:
        return acb(1)
    modulus = abs(q).upper()
    if not modulus < 1:
        msg = f"|q| is not below 1 for {which}"
        raise NotInDeltaSError(msg)
    terms = _tail_terms(k, max(float(arb_upper(modulus)), 1e-300), bits)
    sums = divisor_sums(k, terms)
    total = acb(0)
    for n in range(terms, 0, -1):
        total = total * q + sums[n]
    total *= q
    tail = _tail_bound(k, modulus, terms)
    total += acb(arb(0, tail), arb(0, tail))
    return 1 + factor * total


def inv_j_ball(q: acb, bits: int = DEFAULT_BITS) -> acb:
    """1/j(q) = (E4^3 - E6^2) / (1728 E4^3)."""
    e4 = eisenstein_ball("E4", q, bits)
    e6 = eisenstein_ball("E6", q, bits)
    cube = e4 * e4 * e4
    return (cube - e6 * e6) / (1728 * cube)


# %% --------------------------------------------
# * Delta_S and the q-parameter


def compute_delta_s_radius(
    denominator_exponent: int = 16,
    bits: int = 128,
    fallback: Fraction = FALLBACK_DELTA_S_RADIUS,
) -> Fraction:
    """Largest r = k/2^e with 1/j(-e^(-2 pi)) < -r and 1/j(e^(-2 pi)) > r.

    1/j is increasing along the real diameter of |q| <= e^(-2 pi), so these two
    certified comparisons put every real s with |s| <= r inside the image of
    that disc.
    """
    with bit_precision(bits):
        edge = acb((-2 * arb.pi()).exp())
        upper = inv_j_ball(edge, bits).real
        lower = inv_j_ball(-edge, bits).real
        scale = 2**denominator_exponent
        for k in range(scale // 1728, 0, -1):
            radius = Fraction(k, scale)
            ball = fraction_ball(radius)
            if upper > ball and lower < -ball:
                logger.debug("Delta_S radius certified as %s", radius)
                return radius
    logger.warning("Delta_S radius not certified; using fallback %s", fallback)
    return fallback


def q_from_s(
    s: int | Fraction,
    bits: int = DEFAULT_BITS,
    radius: Fraction = DEFAULT_DELTA_S_RADIUS,
) -> ComplexBall:
    """Ball for q = theta(s), found by certified bisection on 1/j(q) - s.

    Parameters
    ----------
    s : int or Fraction
        Real rational parameter with |s| <= radius.
    bits : int, optional
        Working precision; the bisection runs until the balls for 1/j stop
        separating the midpoint from s.
    radius : Fraction, optional
        Certified Delta_S radius.

    Returns
    -------
    ComplexBall
        Real ball containing theta(s), with |q| < e^(-2 pi).

    Raises
    ------
    NotInDeltaSError
        If |s| exceeds the radius or the bracket cannot be certified.

    """
    s = Fraction(s)
    if s == 0:
        return ComplexBall.exact(0)
    if abs(s) > radius:
        msg = f"|s| = {abs(s)} exceeds the Delta_S radius {radius}"
        raise NotInDeltaSError(msg)

    low, high = (Fraction(0), Q_EDGE) if s > 0 else (-Q_EDGE, Fraction(0))
    target = fraction_ball(s)
    with bit_precision(bits + 32):
        edge_value = inv_j_ball(acb(fraction_ball(high if s > 0 else low)), bits).real
        bracketed = edge_value > target if s > 0 else edge_value < target
        if not bracketed:
            msg = f"Cannot bracket theta({s}) inside |q| < e^(-2 pi)"
            raise NotInDeltaSError(msg)
        steps = 0
        while True:
            middle = (low + high) / 2
            value = inv_j_ball(acb(fraction_ball(middle)), bits + 32).real
            if value > target:
                high = middle
            elif value < target:
                low = middle
            else:
                break
            steps += 1
            if high - low < Fraction(1, 2 ** (bits + 16)):
                break
    logger.debug("q_from_s(%s): %d bisection steps", s, steps)
    return ComplexBall((low + high) / 2, Fraction(0), (high - low) / 2)


# %% --------------------------------------------
# * Period matrices


@dataclass(frozen=True)
class PeriodMatrix:
    """(1/2 pi i) times the integrals of omega, eta over the cycles gamma, delta.

    ``f_val``, ``g_val`` are the gamma-column (omega, eta); ``f_star``,
    ``g_star`` the delta-column.
    """

    f_val: ComplexBall
    f_star: ComplexBall
    g_val: ComplexBall
    g_star: ComplexBall
    s: Fraction | None = None
    q: ComplexBall | None = None
    source: str = "lattice"
    lattice_coordinates: tuple[int, int] | None = None

    def as_acb(self) -> tuple[acb, acb, acb, acb]:
        return (
            self.f_val.to_acb(),
            self.f_star.to_acb(),
            self.g_val.to_acb(),
            self.g_star.to_acb(),
        )

    def determinant(self, bits: int = DEFAULT_BITS) -> ComplexBall:
        """F G* - F* G."""
        with bit_precision(bits):
            f, f_star, g, g_star = self.as_acb()
            return ComplexBall.from_acb(f * g_star - f_star * g)

    def legendre_residual(self, bits: int = DEFAULT_BITS) -> ComplexBall:
        """det - 1/(2 pi i), a ball that must contain 0."""
        with bit_precision(bits):
            f, f_star, g, g_star = self.as_acb()
            return ComplexBall.from_acb(f * g_star - f_star * g - 1 / two_pi_i())

    def legendre_holds(self, bits: int = DEFAULT_BITS) -> bool:
        return self.legendre_residual(bits).contains(0)

    def max_radius(self) -> Fraction:
        return max(e.radius for e in (self.f_val, self.f_star, self.g_val, self.g_star))

    def to_json(self) -> dict[str, Any]:
        return {
            "s": None if self.s is None else str(self.s),
            "source": self.source,
            "F": str(self.f_val),
            "F_star": str(self.f_star),
            "G": str(self.g_val),
            "G_star": str(self.g_star),
        }


@dataclass(frozen=True)
class TatePeriods:
    """Period values on the Tate side at a ball q, with s-derivatives."""

    q: acb
    s: acb
    tau: acb
    e2: acb
    e4: acb
    e6: acb
    alpha: acb
    f: acb
    f_star: acb
    g: acb
    g_star: acb
    f_prime: acb
    f_star_prime: acb


def tau_from_q(q: acb) -> acb:
    """Principal log(q)/(2 pi i); negative real q lands on Re(tau) = 1/2."""
    if q.real < 0:
        return (-q).log() / two_pi_i() + acb(fraction_ball(Fraction(1, 2)))
    return q.log() / two_pi_i()


def tate_periods(q: acb, bits: int = DEFAULT_BITS) -> TatePeriods:
    """F = alpha, F* = alpha tau, G = E2/(12 alpha), G* = G tau + 1/(2 pi i alpha).

    Derivatives in s use ds/dq = s E6 / (q E4) and the Ramanujan identities.
    """
    full_turn = two_pi_i()
    e2 = eisenstein_ball("E2", q, bits)
    e4 = eisenstein_ball("E4", q, bits)
    e6 = eisenstein_ball("E6", q, bits)
    alpha = (e6 / e4).sqrt()
    tau = tau_from_q(q)
    s = inv_j_ball(q, bits)
    g = e2 / (12 * alpha)
    # q d(alpha)/dq
    q_alpha_prime = (
        e2 * e4 * e6 / 6 - e4 * e4 * e4 / 2 + e6 * e6 / 3
    ) / (2 * alpha * e4 * e4)
    f_prime = q_alpha_prime * e4 / (s * e6)
    tau_prime = e4 / (full_turn * s * e6)
    return TatePeriods(
        q=q,
        s=s,
        tau=tau,
        e2=e2,
        e4=e4,
        e6=e6,
        alpha=alpha,
        f=alpha,
        f_star=alpha * tau,
        g=g,
        g_star=g * tau + 1 / (full_turn * alpha),
        f_prime=f_prime,
        f_star_prime=f_prime * tau + alpha * tau_prime,
    )


def period_matrix_from_q(
    q: ComplexBall | acb,
    bits: int = DEFAULT_BITS,
    s: Fraction | None = None,
) -> PeriodMatrix:
    """Period matrix straight from the Tate parameter, without the lattice."""
    with bit_precision(bits):
        point = q.to_acb() if isinstance(q, ComplexBall) else q
        values = tate_periods(point, bits)
        return PeriodMatrix(
            ComplexBall.from_acb(values.f),
            ComplexBall.from_acb(values.f_star),
            ComplexBall.from_acb(values.g),
            ComplexBall.from_acb(values.g_star),
            s=s,
            q=ComplexBall.from_acb(point),
            source="tate",
        )


def _sorted_real_roots(roots: list[acb]) -> list[arb]:
    return sorted((r.real for r in roots), key=lambda x: float(x.mid()), reverse=True)


def lattice_periods(curve: CurvePoint, bits: int = DEFAULT_BITS) -> tuple[acb, acb]:
    """Basis (omega1, omega2) of the period lattice of Y^2 = 4X^3 - g2 X - g3.

    Three real roots e1 > e2 > e3 give a rectangular lattice; one real root
    gives the rhombic lattice with beta = sqrt(3 e1^2 - g2/4).
    """
    with bit_precision(bits):
        roots = [root for root, _ in curve.short_cubic().complex_roots()]
        pi = arb.pi()
        if curve.discriminant > 0:
            e1, e2, e3 = _sorted_real_roots(roots)
            omega1 = acb(pi) / acb((e1 - e3).sqrt()).agm(acb((e1 - e2).sqrt()))
            omega2 = acb(0, pi) / acb((e1 - e3).sqrt()).agm(acb((e2 - e3).sqrt()))
            return omega1, omega2
        real_root = min(roots, key=lambda r: float(abs(r.imag).upper()))
        e1 = real_root.real
        beta = (3 * e1 * e1 - fraction_ball(curve.g2) / 4).sqrt()
        root_beta = 2 * beta.sqrt()
        omega1 = acb(2 * pi) / acb(root_beta).agm(acb((2 * beta + 3 * e1).sqrt()))
        omega2 = -omega1 / 2 + acb(0, pi) / acb(root_beta).agm(
            acb((2 * beta - 3 * e1).sqrt())
        )
        return omega1, omega2


def half_open_shift(value: arb) -> int:
    """Integer n with value - n in (-1/2, 1/2].

    A ball that cannot be separated from a half-integer is taken to sit on
    it, and the representative +1/2 is kept.
    """
    half = fraction_ball(Fraction(1, 2))
    shift = math.ceil(arb_to_fraction(value.mid()) - Fraction(1, 2))
    if (value - shift).overlaps(-half):
        shift -= 1
    return shift


def _extended_gcd(a: int, b: int) -> tuple[int, int, int]:
    if b == 0:
        return (abs(a), 1 if a >= 0 else -1, 0)
    g, x, y = _extended_gcd(b, a % b)
    return g, y, x - (a // b) * y


def _identify_gamma(omega1: acb, omega2: acb, target: acb) -> tuple[int, int]:
    """Integer coordinates of the lattice vector overlapping ``target``."""
    candidates = [
        (m1, m2)
        for m1 in range(-LATTICE_SEARCH, LATTICE_SEARCH + 1)
        for m2 in range(-LATTICE_SEARCH, LATTICE_SEARCH + 1)
        if (m1, m2) != (0, 0) and (m1 * omega1 + m2 * omega2).overlaps(target)
    ]
    if not candidates:
        msg = "No lattice vector matches 2 pi i F(s)"
        raise PeriodMismatchError(msg)
    if len(candidates) > 1:
        msg = f"Balls cannot separate lattice candidates {candidates}"
        raise PrecisionExhaustedError(msg)
    return candidates[0]


def quasi_period(omega: acb, partner: acb, bits: int = DEFAULT_BITS) -> acb:
    """Weierstrass quasi-period eta(omega) = pi^2 E2(partner/omega) / (3 omega).

    ``partner`` completes ``omega`` to a positively oriented basis.
    """
    tau = partner / omega
    if not tau.imag > 0:
        msg = "Basis is not positively oriented"
        raise PeriodMismatchError(msg)
    q = (two_pi_i() * tau).exp()
    pi = arb.pi()
    return acb(pi * pi) * eisenstein_ball("E2", q, bits) / (3 * omega)


def period_matrix(
    curve: CurvePoint,
    bits: int = DEFAULT_BITS,
    radius: Fraction = DEFAULT_DELTA_S_RADIUS,
    f_value: ComplexBall | None = None,
) -> PeriodMatrix:
    """Full period matrix of E_s from the AGM lattice and Weierstrass quasi-periods.

    The gamma cycle is the lattice vector matching 2 pi i F(s), where F(s)
    comes from ``f_value`` (a series evaluation) or else from alpha(theta(s)).
    delta completes gamma with Im(delta/gamma) > 0 and Re(delta/gamma) in
    (-1/2, 1/2].

    Raises
    ------
    NotInDeltaSError
        If s lies outside Delta_S.
    PeriodMismatchError
        If the lattice and q-path gamma-columns do not overlap.
    PrecisionExhaustedError
        If the lattice vector cannot be pinned.

    """
    q = q_from_s(curve.s, bits, radius)
    with bit_precision(bits):
        tate = tate_periods(q.to_acb(), bits)
        full_turn = two_pi_i()
        target_f = f_value.to_acb() if f_value is not None else tate.f
        omega1, omega2 = lattice_periods(curve, bits)
        m1, m2 = _identify_gamma(omega1, omega2, full_turn * target_f)

        divisor, n2, minus_n1 = _extended_gcd(m1, m2)
        if divisor != 1:
            msg = f"Lattice vector ({m1}, {m2}) is not primitive"
            raise PeriodMismatchError(msg)
        gamma = m1 * omega1 + m2 * omega2
        # m1 n2 - m2 n1 = 1
        delta = -minus_n1 * omega1 + n2 * omega2
        if not (delta / gamma).imag > 0:
            delta = -delta
        shift = half_open_shift((delta / gamma).real)
        delta -= shift * gamma

        eta_gamma = quasi_period(gamma, delta, bits)
        eta_delta = quasi_period(delta, -gamma, bits)
        matrix = PeriodMatrix(
            ComplexBall.from_acb(gamma / full_turn),
            ComplexBall.from_acb(delta / full_turn),
            ComplexBall.from_acb(-eta_gamma / full_turn),
            ComplexBall.from_acb(-eta_delta / full_turn),
            s=curve.s,
            q=q,
            source="lattice",
            lattice_coordinates=(m1, m2),
        )
        if not (matrix.f_val.overlaps(tate.f) and matrix.g_val.overlaps(tate.g)):
            msg = f"Lattice and q-path gamma-columns disagree at s = {curve.s}"
            raise PeriodMismatchError(msg)
    return matrix


# %% --------------------------------------------
# * Rational functions and the G series


@dataclass(frozen=True)
class RationalFunction:
    """P(X)/Q(X) in lowest terms with Q(0) = 1 when Q(0) is nonzero."""

    numerator: tuple[Fraction, ...]
    denominator: tuple[Fraction, ...] = (Fraction(1),)

    @classmethod
    def from_polys(
        cls,
        numerator: fmpq_poly,
        denominator: fmpq_poly,
    ) -> RationalFunction:
        """Reduce to lowest terms and normalize the denominator."""
        common = numerator.gcd(denominator)
        numerator, denominator = numerator // common, denominator // common
        lead = denominator[0]
        if lead == 0:
            lead = denominator[denominator.degree()]
        numerator, denominator = numerator / lead, denominator / lead
        return cls(_poly_fractions(numerator), _poly_fractions(denominator))

    def _polys(self) -> tuple[fmpq_poly, fmpq_poly]:
        return (
            fmpq_poly([_fmpq(c) for c in self.numerator]),
            fmpq_poly([_fmpq(c) for c in self.denominator]),
        )

    @property
    def degree(self) -> int:
        return max(len(self.numerator), len(self.denominator)) - 1

    def __call__(self, x: int | Fraction) -> Fraction:
        numerator, denominator = self._polys()
        point = _fmpq(Fraction(x))
        value = numerator(point) / denominator(point)
        return Fraction(int(value.p), int(value.q))

    def evaluate_ball(self, x: acb) -> acb:
        total_num, total_den = acb(0), acb(0)
        for c in reversed(self.numerator):
            total_num = total_num * x + acb(fraction_ball(c))
        for c in reversed(self.denominator):
            total_den = total_den * x + acb(fraction_ball(c))
        return total_num / total_den

    def to_series(self, order: int) -> QSeries:
        numerator = QSeries.from_coeffs(self.numerator, order)
        return numerator * reciprocal(QSeries.from_coeffs(self.denominator, order))

    def __str__(self) -> str:
        def show(coeffs: tuple[Fraction, ...]) -> str:
            terms = [
                f"{c}" if k == 0 else f"{c}*X^{k}" for k, c in enumerate(coeffs) if c
            ]
            return " + ".join(terms) or "0"

        if self.denominator == (Fraction(1),):
            return show(self.numerator)
        return f"({show(self.numerator)})/({show(self.denominator)})"


def _poly_fractions(poly: fmpq_poly) -> tuple[Fraction, ...]:
    coeffs = poly.coeffs() or [fmpq(0)]
    return tuple(Fraction(int(c.p), int(c.q)) for c in coeffs)


def fit_rational_function(
    points: list[tuple[Fraction, Fraction]],
    degree: int,
) -> RationalFunction | None:
    """Exact P/Q with deg P, deg Q <= degree through the first 2*degree + 2 points.

    The remaining points must also lie on the fitted function.
    """
    used = 2 * degree + 2
    if len(points) < used:
        msg = f"Need {used} points for degree {degree}, got {len(points)}"
        raise ValueError(msg)
    # unknowns: p_0..p_d, q_0..q_d with P(x) - y Q(x) = 0
    rows = [
        [x**e for e in range(degree + 1)] + [-y * x**e for e in range(degree + 1)]
        for x, y in points[:used]
    ]
    for vector in rational_nullspace(rows, 2 * degree + 2):
        numerator = fmpq_poly([_fmpq(v) for v in vector[: degree + 1]])
        denominator = fmpq_poly([_fmpq(v) for v in vector[degree + 1 :]])
        if denominator == 0 or any(denominator(_fmpq(x)) == 0 for x, _ in points):
            continue
        candidate = RationalFunction.from_polys(numerator, denominator)
        if all(candidate(x) == y for x, y in points):
            return candidate
    return None


@dataclass(frozen=True)
class GSeriesResult:
    """Reconstructed G = a F + b F' with its validation data."""

    series: QSeries
    a: RationalFunction
    b: RationalFunction
    sample_points: tuple[Fraction, ...]
    held_out: tuple[tuple[Fraction, ComplexBall], ...] = field(default_factory=tuple)

    @property
    def held_out_ok(self) -> bool:
        return all(residual.contains(0) for _, residual in self.held_out)


def sample_parameters(count: int, start: int = 0) -> list[Fraction]:
    """Sample points 1/(2000 + 97k) inside Delta_S."""
    return [Fraction(1, 2000 + 97 * k) for k in range(start, start + count)]


def _solve_ab(tate: TatePeriods, g: acb, g_star: acb) -> tuple[acb, acb]:
    """Solve G = aF + bF', G* = aF* + bF*' for (a, b)."""
    wronskian = tate.f * tate.f_star_prime - tate.f_star * tate.f_prime
    a = (g * tate.f_star_prime - g_star * tate.f_prime) / wronskian
    b = (tate.f * g_star - tate.f_star * g) / wronskian
    return a, b


def reconstruct_g_series(
    f_series: QSeries,
    sample_count: int = 34,
    bits: int = DEFAULT_BITS,
    degree_budget: int = 8,
    max_budget: int = 16,
    held_out_count: int = 3,
    denominator_bound: int = 10**12,
) -> GSeriesResult:
    """Recover a(X), b(X) with eta = a omega + b d(omega)/ds and return G = aF + bF'.

    At each sample s the lattice eta-periods (G, G*) are expressed through the
    Tate-side (F, F*, F', F*'); the pointwise a(s), b(s) are rationalized and
    fitted by rational functions of degree at most the budget, which doubles
    on failure. Held-out points check the residual G - (aF + bF').

    Raises
    ------
    ReconstructionFailedError
        If a ball cannot be rationalized or no fit exists within ``max_budget``.

    """
    if sample_count < 2 * degree_budget + 2:
        msg = f"sample_count {sample_count} is below 2*{degree_budget}+2"
        raise ValueError(msg)
    samples = sample_parameters(sample_count)
    a_points: list[tuple[Fraction, Fraction]] = []
    b_points: list[tuple[Fraction, Fraction]] = []
    for s in samples:
        matrix = period_matrix(CurvePoint(s), bits)
        with bit_precision(bits):
            tate = tate_periods(matrix.q.to_acb(), bits)
            a, b = _solve_ab(tate, matrix.g_val.to_acb(), matrix.g_star.to_acb())
            a_value = rational_from_ball(a.real, denominator_bound)
            b_value = rational_from_ball(b.real, denominator_bound)
        if a_value is None or b_value is None:
            msg = f"Cannot rationalize a({s}), b({s}) at {bits} bits"
            raise ReconstructionFailedError(msg)
        a_points.append((s, a_value))
        b_points.append((s, b_value))

    budget = degree_budget
    while True:
        limit = min(budget, (sample_count - 2) // 2)
        a_fit = _fit_minimal(a_points, limit)
        b_fit = _fit_minimal(b_points, limit)
        if a_fit is not None and b_fit is not None:
            break
        if budget >= max_budget:
            msg = f"No rational a, b of degree <= {max_budget}"
            raise ReconstructionFailedError(msg)
        budget = min(2 * budget, max_budget)
        logger.debug("reconstruct_g_series: raising degree budget to %d", budget)

    order = f_series.order - 1
    series = (
        a_fit.to_series(order) * f_series.truncate(order)
        + b_fit.to_series(order) * derivative(f_series)
    )

    held_out = []
    for s in sample_parameters(held_out_count, start=sample_count):
        matrix = period_matrix(CurvePoint(s), bits)
        with bit_precision(bits):
            tate = tate_periods(matrix.q.to_acb(), bits)
            point = acb(fraction_ball(s))
            predicted = (
                a_fit.evaluate_ball(point) * tate.f
                + b_fit.evaluate_ball(point) * tate.f_prime
            )
            residual = ComplexBall.from_acb(matrix.g_val.to_acb() - predicted)
        held_out.append((s, residual))
    result = GSeriesResult(series, a_fit, b_fit, tuple(samples), tuple(held_out))
    if not result.held_out_ok:
        logger.warning("Reconstructed G misses a held-out eta-period")
    return result


def _fit_minimal(
    points: list[tuple[Fraction, Fraction]],
    budget: int,
) -> RationalFunction | None:
    for degree in range(budget + 1):
        fitted = fit_rational_function(points, degree)
        if fitted is not None:
            logger.debug("Rational fit found at degree %d", degree)
            return fitted
    return None
