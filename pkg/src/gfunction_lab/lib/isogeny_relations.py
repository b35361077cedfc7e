"""Module building and verifying period relations for isogenous pairs of curves."""

# * Creation : Oct 2026
# * License: MIT license

# %% --------------------------------------------
# * Libraries

from __future__ import annotations

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass, field, replace
from enum import StrEnum
from fractions import Fraction
from functools import cache, partial
from itertools import product
from typing import Any

from flint import acb, fmpz_mat

from lib.gfunction_tools import (
    Coefficient,
    QuadraticNumber,
    RelationPoly,
    divisor_count,
    format_scalar,
    parse_scalar,
    primitive_integer_vector,
    scalar_to_acb,
    scalar_to_padic,
)
from lib.modular_qexp import delta_series, eisenstein, named_series
from lib.period_lab import (
    DEFAULT_DELTA_S_RADIUS,
    MAX_BITS,
    CurvePoint,
    PeriodMatrix,
    PrecisionExhaustedError,
    escalate_bits,
    period_matrix,
    period_matrix_from_q,
    two_pi_i,
)
from lib.place_eval import (
    DEFAULT_BITS,
    ComplexBall,
    PadicNum,
    bit_precision,
    eval_padic,
    rational_from_ball,
    valuation,
)
from lib.series_core import QSeries

# Set up logging
logger = logging.getLogger(__name__)

SUPPORTED_LEVELS = (2, 3, 5, 7)
HOMOLOGY_BOX = 4
MODPOLY_MARGIN = 10
PAIR_VARIABLES = ("Y1", "Y2")
BUNDLE_VARIABLES = ("Y1", "Z1", "Y2", "Z2", "Y3", "Z3", "Y4", "Z4")

# residual radius below which an archimedean relation counts as verified
ARCH_TOLERANCE = Fraction(1, 10**20)

PeriodMatrices = tuple[PeriodMatrix, PeriodMatrix]
MatrixSource = Callable[[int], PeriodMatrices]

# %% --------------------------------------------
# * Exceptions


class InsufficientOrderError(ValueError):
    """Raised when a q-expansion order cannot pin the modular polynomial."""


class BadParameterError(ValueError):
    """Raised when a pair parameter violates a precondition."""


class CMPointError(ValueError):
    """Raised when a j-invariant is integral and may have complex multiplication."""


class AmbiguousLatticeError(ArithmeticError):
    """Raised when several homology matrices match within the balls."""


class DegenerateInputError(ValueError):
    """Raised when the quadratic relation branch gets r = r' = 0."""


class NoAdmissiblePlaceError(ValueError):
    """Raised when no requested place satisfies the convergence conditions."""


# %% --------------------------------------------
# * Modular polynomials


@dataclass(frozen=True)
class ModularPolynomial:
    """Classical modular polynomial Phi_M(X, Y) with integer coefficients.

    ``coefficients`` maps (i, k) to the coefficient of X^i Y^k.
    """

    level: int
    coefficients: dict[tuple[int, int], int]
    verified_order: int = 0

    def coefficient(self, i: int, k: int) -> int:
        return self.coefficients.get((i, k), 0)

    @property
    def degree_x(self) -> int:
        return max(i for i, _ in self.coefficients)

    @property
    def degree_y(self) -> int:
        return max(k for _, k in self.coefficients)

    def is_symmetric(self) -> bool:
        return all(
            self.coefficient(k, i) == c for (i, k), c in self.coefficients.items()
        )

    def evaluate(self, x: int | Fraction, y: int | Fraction) -> Fraction:
        """Exact value Phi_M(x, y)."""
        x, y = Fraction(x), Fraction(y)
        return sum(
            (c * x**i * y**k for (i, k), c in self.coefficients.items()),
            Fraction(0),
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "level": self.level,
            "verified_order": self.verified_order,
            "terms": [
                {"monomial": [i, k], "coefficient": str(c)}
                for (i, k), c in sorted(self.coefficients.items(), reverse=True)
            ],
        }

    def __str__(self) -> str:
        return " + ".join(
            f"{c}*X^{i}*Y^{k}"
            for (i, k), c in sorted(self.coefficients.items(), reverse=True)
        )


def psi(level: int) -> int:
    """Dedekind psi, M * prod_{p | M} (1 + 1/p)."""
    value = Fraction(level)
    for prime in range(2, level + 1):
        if level % prime == 0 and all(prime % d for d in range(2, prime)):
            value *= 1 + Fraction(1, prime)
    return int(value)


def _dilate(series: QSeries, factor: int, order: int) -> QSeries:
    """f(q^factor) truncated at ``order``."""
    coeffs = [Fraction(0)] * (order + 1)
    for n in range(order // factor + 1):
        coeffs[n * factor] = series[n]
    return QSeries.from_coeffs(coeffs, order)


def _cleared_powers(order: int, top: int, dilation: int) -> list[QSeries]:
    """[E4^(3a) Delta^(top-a)](q^dilation) for a = 0..top.

    Each term equals j^a Delta^top, evaluated at q^dilation.
    """
    inner = order // dilation
    e4_cube = eisenstein("E4", inner) ** 3
    delta = delta_series(inner)
    terms = []
    for a in range(top + 1):
        term = e4_cube**a * delta ** (top - a)
        terms.append(_dilate(term, dilation, order))
    return terms


@cache
def modular_polynomial(level: int, order: int) -> ModularPolynomial:
    """Compute Phi_M from q-expansions for a prime level M.

    Every monomial j(q)^a j(q^M)^b with a, b <= M+1 is multiplied through by
    Delta(q)^(M+1) Delta(q^M)^(M+1), giving integral power series; the kernel of
    their coefficient matrix, taken over every row up to the order, must be
    one-dimensional.

    Parameters
    ----------
    level : int
        Prime level in (2, 3, 5, 7).
    order : int
        Phi_M(j(q), j(q^M)) is certified to vanish modulo q^order.

    Raises
    ------
    InsufficientOrderError
        If ``order`` leaves too few equations or the kernel is not a line.

    """
    if level not in SUPPORTED_LEVELS:
        msg = f"Modular polynomials are generated for prime levels {SUPPORTED_LEVELS}"
        raise BadParameterError(msg)
    top = level + 1
    unknowns = (top + 1) ** 2
    if order < unknowns + MODPOLY_MARGIN:
        msg = f"Level {level} needs order >= {unknowns + MODPOLY_MARGIN}, got {order}"
        raise InsufficientOrderError(msg)

    # clearing Delta powers shifts the valuation by top*(1 + level)
    scaled_order = order + top * (1 + level)
    left = _cleared_powers(scaled_order, top, 1)
    right = _cleared_powers(scaled_order, top, level)
    monomials = [(a, b) for a in range(top + 1) for b in range(top + 1)]
    columns = [left[a] * right[b] for a, b in monomials]

    rows = [[int(column[n]) for column in columns] for n in range(scaled_order + 1)]
    kernel, nullity = fmpz_mat(rows).nullspace()
    if nullity != 1:
        msg = f"Level {level}: kernel of dimension {nullity} at order {order}"
        raise InsufficientOrderError(msg)
    vector = primitive_integer_vector(
        [Fraction(int(kernel[i, 0])) for i in range(unknowns)]
    )
    leading = vector[monomials.index((top, 0))]
    if leading < 0:
        vector = [-v for v in vector]
    coefficients = {
        monomial: int(v) for monomial, v in zip(monomials, vector, strict=True) if v
    }
    phi = ModularPolynomial(level, coefficients, order)
    if not phi.is_symmetric():
        msg = f"Phi_{level} is not symmetric"
        raise InsufficientOrderError(msg)
    if phi.degree_x != psi(level) or phi.degree_y != psi(level):
        msg = f"Phi_{level} has bidegree ({phi.degree_x}, {phi.degree_y})"
        raise InsufficientOrderError(msg)
    logger.debug("Phi_%d certified modulo q^%d", level, order)
    return phi


def modular_vanishing_order(phi: ModularPolynomial, order: int) -> int:
    """Valuation of Phi_M(j(q), j(q^M)) checked up to q^order.

    The value is computed as Delta(q)^(M+1) Delta(q^M)^(M+1) Phi_M(j(q), j(q^M))
    and shifted back, so a result of at least ``order`` means Phi_M vanishes
    modulo q^order.
    """
    top = phi.level + 1
    shift = top * (1 + phi.level)
    scaled_order = order + shift
    left = _cleared_powers(scaled_order, top, 1)
    right = _cleared_powers(scaled_order, top, phi.level)
    total = QSeries.zero(scaled_order)
    for (a, b), coefficient in phi.coefficients.items():
        total = total + coefficient * (left[a] * right[b])
    return min(total.valuation, scaled_order + 1) - shift


# %% --------------------------------------------
# * Isogenous pairs


class Provenance(StrEnum):
    """How a pair of isogenous curves was produced."""

    TATE_POWER = "tate_power"
    X0_PARAM = "x0_param"
    SYNTHETIC = "synthetic"


@dataclass(frozen=True)
class IsogenyScalars:
    """Scalars of one isogeny used by the relation polynomials."""

    a: Coefficient
    b: Coefficient
    d: Coefficient
    r: int
    p: int = 1


@dataclass(frozen=True)
class IsogenyPair:
    """Curves E_s1 -> E_s2 linked by an isogeny of degree M.

    ``matrix`` is (p, q, r, s) with f_*(gamma1) = p gamma2 + r delta2 and
    f_*(delta1) = q gamma2 + s delta2; ``a``, ``b``, ``d`` act on omega and eta.
    """

    degree: int
    provenance: Provenance
    s1: Fraction | None = None
    s2: Fraction | None = None
    parameter: Fraction | None = None
    exponents: tuple[int, int] | None = None
    a: Coefficient | None = None
    b: Coefficient | None = None
    d: Coefficient | None = None
    matrix: tuple[int, int, int, int] | None = None
    a_ball: ComplexBall | None = None

    def __post_init__(self) -> None:
        """Check a*d = M and det = M once populated."""
        if self.matrix is not None:
            p, q, r, s = self.matrix
            if p * s - q * r != self.degree:
                msg = f"Homology matrix {self.matrix} has determinant != {self.degree}"
                raise ValueError(msg)
        if self.a is not None and self.d is not None:
            product_ad = QuadraticNumber(Fraction(0)) + self.a * self.d
            if product_ad.simplify() != self.degree:
                msg = f"a*d = {product_ad} differs from the degree {self.degree}"
                raise ValueError(msg)

    @property
    def populated(self) -> bool:
        return None not in (self.a, self.b, self.d, self.matrix)

    def scalars(self) -> IsogenyScalars:
        if not self.populated:
            msg = "Isogeny scalars are not populated"
            raise ValueError(msg)
        p, _, r, _ = self.matrix
        return IsogenyScalars(self.a, self.b, self.d, r, p)

    def to_dict(self) -> dict[str, Any]:
        def text(value: Any) -> str | None:
            return None if value is None else format_scalar(value)

        return {
            "degree": self.degree,
            "provenance": str(self.provenance),
            "s1": text(self.s1),
            "s2": text(self.s2),
            "parameter": text(self.parameter),
            "exponents": None if self.exponents is None else list(self.exponents),
            "a": text(self.a),
            "b": text(self.b),
            "d": text(self.d),
            "matrix": None if self.matrix is None else list(self.matrix),
            "a_ball": None if self.a_ball is None else str(self.a_ball),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> IsogenyPair:
        def rational(key: str) -> Fraction | None:
            return None if data.get(key) is None else Fraction(data[key])

        def scalar(key: str) -> Coefficient | None:
            return None if data.get(key) is None else parse_scalar(data[key])

        exponents = data.get("exponents")
        matrix = data.get("matrix")
        return cls(
            degree=int(data["degree"]),
            provenance=Provenance(data["provenance"]),
            s1=rational("s1"),
            s2=rational("s2"),
            parameter=rational("parameter"),
            exponents=None if exponents is None else tuple(exponents),
            a=scalar("a"),
            b=scalar("b"),
            d=scalar("d"),
            matrix=None if matrix is None else tuple(matrix),
        )


def x0_j_invariants(t: Fraction) -> tuple[Fraction, Fraction]:
    """j1 = (t+256)^3/t^2 and j2 = (t+16)^3/t on X0(2)."""
    return (t + 256) ** 3 / t**2, (t + 16) ** 3 / t


def x0_pair(
    t: int | Fraction,
    prime: int,
    radius: Fraction = DEFAULT_DELTA_S_RADIUS,
) -> IsogenyPair:
    """Degree-2 pair s_i = 1/j_i from the X0(2) Hauptmodul t.

    Raises
    ------
    BadParameterError
        If Phi_2(j1, j2) != 0, a j-invariant is 0 or 1728, |1/j_i| exceeds
        ``radius`` or v_p(1/j_i) < 1.
    CMPointError
        If a j-invariant is integral.

    """
    t = Fraction(t)
    if t in (0, -256, -16):
        msg = f"t = {t} gives a degenerate j-invariant"
        raise BadParameterError(msg)
    j1, j2 = x0_j_invariants(t)
    if 1728 in (j1, j2):
        msg = f"t = {t} gives j = 1728"
        raise BadParameterError(msg)
    phi = modular_polynomial(2, 60)
    if phi.evaluate(j1, j2) != 0:
        msg = f"Phi_2(j1, j2) != 0 at t = {t}"
        raise BadParameterError(msg)
    if j1.denominator == 1 or j2.denominator == 1:
        msg = f"Integral j-invariant at t = {t}; cannot exclude CM"
        raise CMPointError(msg)
    s1, s2 = 1 / j1, 1 / j2
    for s in (s1, s2):
        if abs(s) > radius:
            msg = f"|1/j| = {abs(s)} exceeds the Delta_S radius {radius}"
            raise BadParameterError(msg)
        if valuation(s, prime) < 1:
            msg = f"v_{prime}({s}) < 1"
            raise BadParameterError(msg)
    return IsogenyPair(2, Provenance.X0_PARAM, s1=s1, s2=s2, parameter=t)


def identity_pair(s: int | Fraction) -> IsogenyPair:
    """The identity isogeny of E_s."""
    s = Fraction(s)
    return IsogenyPair(1, Provenance.SYNTHETIC, s1=s, s2=s)


def tate_isogeny_data(m: int, n: int) -> IsogenyPair:
    """Symbolic pair q1 = q^n, q2 = q^m of degree M = mn.

    Homology for such pairs has r = 0 and p = m.
    """
    if m < 1 or n < 1:
        msg = f"Exponents must be positive, got ({m}, {n})"
        raise BadParameterError(msg)
    return IsogenyPair(m * n, Provenance.TATE_POWER, exponents=(m, n))


def tate_period_matrices(
    pair: IsogenyPair,
    q: int | Fraction,
    bits: int = DEFAULT_BITS,
) -> tuple[PeriodMatrix, PeriodMatrix]:
    """Period matrices at q1 = q^n and q2 = q^m for a Tate-power pair."""
    if pair.exponents is None:
        msg = "Pair has no Tate exponents"
        raise BadParameterError(msg)
    m, n = pair.exponents
    q = Fraction(q)
    return (
        period_matrix_from_q(ComplexBall.exact(q**n), bits),
        period_matrix_from_q(ComplexBall.exact(q**m), bits),
    )


# %% --------------------------------------------
# * Scalar extraction


def find_homology_matrix(
    source: PeriodMatrix,
    target: PeriodMatrix,
    degree: int,
    bits: int = DEFAULT_BITS,
) -> tuple[int, int, int, int]:
    """Integer (p, q, r, s) of determinant M with (pF2 + rF2*) F1* = (qF2 + sF2*) F1.

    The sign is fixed by p > 0, or p = 0 and r > 0.

    Raises
    ------
    PrecisionExhaustedError
        If no matrix in the search box matches.
    AmbiguousLatticeError
        If several matrices match.

    """
    with bit_precision(bits):
        f1, f1_star, _, _ = source.as_acb()
        f2, f2_star, _, _ = target.as_acb()
        span = range(-HOMOLOGY_BOX, HOMOLOGY_BOX + 1)
        matches = []
        for p, q, r, s in product(span, repeat=4):
            if p * s - q * r != degree or p < 0 or (p == 0 and r <= 0):
                continue
            lhs = (p * f2 + r * f2_star) * f1_star
            rhs = (q * f2 + s * f2_star) * f1
            if lhs.overlaps(rhs):
                matches.append((p, q, r, s))
    if not matches:
        msg = f"No homology matrix of determinant {degree} in the search box"
        raise PrecisionExhaustedError(msg)
    if len(matches) > 1:
        msg = f"Several homology matrices match at {bits} bits: {matches}"
        raise AmbiguousLatticeError(msg)
    return matches[0]


def _quadratic_from_ball(
    ball: acb,
    radicand: int,
    denominator_bound: int,
) -> Coefficient | None:
    """Rational y with ball = y sqrt(radicand), as a scalar."""
    root = acb(radicand).sqrt()
    y = rational_from_ball((ball / root).real, denominator_bound)
    if y is None:
        return None
    return QuadraticNumber(Fraction(0), y, radicand).simplify()


def _reconstruct_a(a_ball: acb, denominator_bound: int) -> Coefficient:
    """Exact a from its ball: a^2 is rational, a = y sqrt(D) with D squarefree."""
    square = rational_from_ball((a_ball * a_ball).real, denominator_bound)
    if square is None:
        msg = "a^2 could not be rationalized"
        raise PrecisionExhaustedError(msg)
    for sign in (1, -1):
        candidate = QuadraticNumber.sqrt_of(square, sign)
        if candidate.to_acb().overlaps(a_ball):
            return candidate.simplify()
    msg = f"Neither square root of {square} lies in the ball for a"
    raise PrecisionExhaustedError(msg)


def _period_pair(pair: IsogenyPair, bits: int) -> tuple[PeriodMatrix, PeriodMatrix]:
    if pair.provenance == Provenance.TATE_POWER:
        msg = "Tate-power pairs need explicit period matrices"
        raise BadParameterError(msg)
    return (
        period_matrix(CurvePoint(pair.s1), bits),
        period_matrix(CurvePoint(pair.s2), bits),
    )


def _homology_search(
    pair: IsogenyPair,
    matrices: PeriodMatrices | MatrixSource | None,
    bits: int,
    max_bits: int,
) -> tuple[int, PeriodMatrices, tuple[int, int, int, int]]:
    """Homology matrix, doubling the precision while several matrices match.

    Fixed matrices cannot be recomputed, so their ambiguity is final.
    """
    if isinstance(matrices, tuple):
        return bits, matrices, find_homology_matrix(*matrices, pair.degree, bits)
    source_of = matrices if matrices is not None else partial(_period_pair, pair)

    def attempt(
        current: int,
    ) -> tuple[PeriodMatrices, tuple[int, int, int, int]] | None:
        computed = source_of(current)
        try:
            return computed, find_homology_matrix(*computed, pair.degree, current)
        except AmbiguousLatticeError:
            return None

    used, (computed, matrix) = escalate_bits(
        attempt, bits, max_bits, "homology matrix search"
    )
    return used, computed, matrix


def extract_isogeny_scalars(
    pair: IsogenyPair,
    bits: int = DEFAULT_BITS,
    matrices: PeriodMatrices | MatrixSource | None = None,
    denominator_bound: int = 10**12,
    max_bits: int = MAX_BITS,
) -> IsogenyPair:
    """Populate (p, q, r, s) and the scalars a, b, d from period matrices.

    a = (pF2 + rF2*)/F1; b and d solve bF1 + dG1 = pG2 + rG2* and
    bF1* + dG1* = qG2 + sG2*. For pairs with rational parameters a is
    reconstructed exactly (a^2 rational) and revalidated at doubled precision;
    Tate-power pairs keep only the ball for a.

    ``matrices`` is either the two period matrices or a function of the
    precision returning them; when several homology matrices match, the
    search is repeated at doubled precision up to ``max_bits`` unless the
    matrices are fixed.

    Raises
    ------
    PrecisionExhaustedError
        If a ball cannot be rationalized, a*d = M fails on the balls or the
        homology matrix is still ambiguous at ``max_bits``.
    AmbiguousLatticeError
        If several homology matrices match fixed period matrices.

    """
    own_matrices = matrices is None
    bits, (source, target), matrix = _homology_search(pair, matrices, bits, max_bits)
    p, q, r, s = matrix
    with bit_precision(bits):
        f1, f1_star, g1, g1_star = source.as_acb()
        f2, f2_star, g2, g2_star = target.as_acb()
        a_ball = (p * f2 + r * f2_star) / f1
        eta_gamma = p * g2 + r * g2_star
        eta_delta = q * g2 + s * g2_star
        full_turn = two_pi_i()
        b_ball = (eta_gamma * g1_star - eta_delta * g1) * full_turn
        d_ball = (f1 * eta_delta - f1_star * eta_gamma) * full_turn
        populated = replace(pair, matrix=matrix, a_ball=ComplexBall.from_acb(a_ball))
        if pair.provenance == Provenance.TATE_POWER:
            return populated

        a = _reconstruct_a(a_ball, denominator_bound)
        radicand = a.radicand if isinstance(a, QuadraticNumber) else 1
        b = _quadratic_from_ball(b_ball, radicand, denominator_bound)
        d = QuadraticNumber(Fraction(pair.degree)) / a
        if b is None or not scalar_to_acb(b).overlaps(b_ball):
            msg = "b could not be reconstructed from its ball"
            raise PrecisionExhaustedError(msg)
        if not d.to_acb().overlaps(d_ball):
            msg = f"d ball does not contain M/a = {d}"
            raise PrecisionExhaustedError(msg)

    if own_matrices:
        source2, target2 = _period_pair(pair, 2 * bits)
        with bit_precision(2 * bits):
            f1, f1_star, _, _ = source2.as_acb()
            f2, f2_star, _, _ = target2.as_acb()
            if not scalar_to_acb(a).overlaps((p * f2 + r * f2_star) / f1):
                msg = f"a = {a} fails to revalidate at {2 * bits} bits"
                raise PrecisionExhaustedError(msg)

    logger.debug("Pair %s: matrix %s, a = %s", pair.parameter, matrix, a)
    return replace(populated, a=a, b=b, d=d.simplify())


# %% --------------------------------------------
# * Relation polynomials


def positive_divisors(number: int) -> list[int]:
    return [k for k in range(1, number + 1) if number % k == 0]


def build_P_fin(a: Coefficient | int, degree: int) -> RelationPoly:  # noqa: N802
    """Product of (a Y1 - m Y2) over the positive and negative divisors m of M.

    Pairs m, -m multiply to a^2 Y1^2 - m^2 Y2^2.
    """
    if not a:
        msg = "build_P_fin needs a nonzero a"
        raise BadParameterError(msg)
    if degree < 1:
        msg = f"Isogeny degree must be positive, got {degree}"
        raise BadParameterError(msg)
    square = QuadraticNumber(Fraction(0)) + a * a
    relation = RelationPoly.from_constants(PAIR_VARIABLES, {(0, 0): 1})
    for m in positive_divisors(degree):
        factor = RelationPoly.from_constants(
            PAIR_VARIABLES,
            {(2, 0): square, (0, 2): -(m * m)},
        )
        relation = relation * factor
    return relation


def build_P_inf(  # noqa: N802
    first: IsogenyScalars,
    second: IsogenyScalars | None = None,
    *,
    branch: str = "auto",
) -> RelationPoly:
    """Archimedean relation in (Y1, Z1, ..., Y4, Z4), Y = F and Z = G values.

    With r = 0 the linear relation a Y1 - p Y2 is returned. Otherwise
    r'(-a Z2 Y1 + b Y2 Y1 + d Y2 Z1) + r(a' Z4 Y3 - b' Y4 Y3 - d' Y4 Z3).

    Raises
    ------
    DegenerateInputError
        If the quadratic branch gets r = r' = 0 or no second pair.

    """
    if branch == "auto":
        branch = "linear" if first.r == 0 else "quadratic"
    if branch == "linear":
        if first.r != 0:
            msg = "The linear branch needs r = 0"
            raise DegenerateInputError(msg)
        return RelationPoly.from_constants(
            BUNDLE_VARIABLES,
            {_mono(Y1=1): first.a, _mono(Y2=1): -first.p},
        )
    if second is None:
        msg = "The quadratic branch needs a second pair"
        raise DegenerateInputError(msg)
    if first.r == 0 and second.r == 0:
        msg = "r = r' = 0: use the linear branch"
        raise DegenerateInputError(msg)
    r1, r2 = second.r, first.r
    terms: dict[tuple[int, ...], Coefficient] = {}
    for monomial, value in (
        (_mono(Z2=1, Y1=1), -r1 * first.a),
        (_mono(Y2=1, Y1=1), r1 * first.b),
        (_mono(Y2=1, Z1=1), r1 * first.d),
        (_mono(Z4=1, Y3=1), r2 * second.a),
        (_mono(Y4=1, Y3=1), -r2 * second.b),
        (_mono(Y4=1, Z3=1), -r2 * second.d),
    ):
        terms[monomial] = terms.get(monomial, Fraction(0)) + value
    return RelationPoly.from_constants(BUNDLE_VARIABLES, terms)


def _mono(**exponents: int) -> tuple[int, ...]:
    return tuple(exponents.get(name, 0) for name in BUNDLE_VARIABLES)


def survives_diagonal(relation: RelationPoly) -> bool:
    """True if the relation stays nonzero after Y1 -> Y3, Z1 -> Z3."""
    return not relation.substitute({"Y1": "Y3", "Z1": "Z3"}).is_zero


@dataclass(frozen=True)
class RelationBundle:
    """P_inf and P_fin for one isogeny degree, with their degree bounds."""

    p_inf: RelationPoly
    p_fin: RelationPoly
    degree: int
    auxiliary_degree: int = 1
    field_degree: int = 1

    @property
    def fin_bound(self) -> int:
        """2 d(M T^2)."""
        return 2 * divisor_count(self.degree * self.auxiliary_degree**2)

    @property
    def inf_bound(self) -> int:
        return 2 * self.field_degree

    def check_bounds(self) -> bool:
        return (
            self.p_fin.degree <= self.fin_bound
            and 0 < self.p_inf.degree <= self.inf_bound
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "degree": self.degree,
            "auxiliary_degree": self.auxiliary_degree,
            "fin_bound": self.fin_bound,
            "inf_bound": self.inf_bound,
            "P_inf": self.p_inf.to_dict(),
            "P_fin": self.p_fin.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> RelationBundle:
        return cls(
            RelationPoly.from_dict(data["P_inf"]),
            RelationPoly.from_dict(data["P_fin"]),
            int(data["degree"]),
            int(data.get("auxiliary_degree", 1)),
        )


def build_bundle(
    pair: IsogenyPair,
    second: IsogenyPair | None = None,
) -> RelationBundle:
    """Relation bundle of a populated pair (and an optional second pair).

    The second pair must involve other curves: with both halves built from the
    same periods P_inf cancels identically and checks nothing.
    """
    if second is not None and _same_curves(pair, second):
        msg = "The second pair repeats the curves of the first pair"
        raise DegenerateInputError(msg)
    first = pair.scalars()
    other = second.scalars() if second is not None else None
    if first.r != 0 and other is None:
        msg = "Pair has r != 0; the archimedean relation needs a second pair"
        raise DegenerateInputError(msg)
    return RelationBundle(
        build_P_inf(first, other),
        build_P_fin(pair.a, pair.degree),
        pair.degree,
    )


def _same_curves(first: IsogenyPair, second: IsogenyPair) -> bool:
    if first == second:
        return True
    if first.s1 is None or first.s2 is None:
        return False
    return (first.s1, first.s2) == (second.s1, second.s2)


# %% --------------------------------------------
# * Verification across places


@dataclass(frozen=True)
class PlaceResult:
    """Outcome of the relation check at one place."""

    place: str
    admissible: bool
    passed: bool
    detail: dict[str, str] = field(default_factory=dict)
    vanishing_factors: tuple[int, ...] = ()


@dataclass(frozen=True)
class VerificationReport:
    """Results of ``multi_place_verify`` for every requested place."""

    results: tuple[PlaceResult, ...]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results if r.admissible)


def parse_place(place: str | int) -> int | None:
    """'inf' gives None; 'p=5', '5' or 5 give the prime."""
    if isinstance(place, int):
        return place
    text = place.strip().lower()
    if text in ("inf", "infinity", "arch"):
        return None
    return int(text.removeprefix("p="))


def _parameters(pairs: list[IsogenyPair]) -> list[Fraction]:
    values = []
    for pair in pairs:
        if pair.s1 is None or pair.s2 is None:
            msg = "Place verification needs rational parameters"
            raise BadParameterError(msg)
        values.extend([pair.s1, pair.s2])
    return values


def _decide(residual: ComplexBall, tolerance: Fraction) -> bool | None:
    """True for a tight ball around 0, False if 0 is excluded, None if undecided."""
    if not residual.contains(0):
        return False
    return True if residual.radius <= tolerance else None


def _archimedean_attempt(
    pairs: list[IsogenyPair],
    bundle: RelationBundle,
    bits: int,
    tolerance: Fraction,
) -> PlaceResult | None:
    detail = {"bits": str(bits)}
    verdicts: list[bool | None] = []
    values: list[acb] = []
    with bit_precision(bits):
        full_turn = two_pi_i()
        for index, pair in enumerate(pairs, start=1):
            source, target = _period_pair(pair, bits)
            f1, _, g1, _ = source.as_acb()
            f2, _, g2, _ = target.as_acb()
            scalars = pair.scalars()
            lhs = (
                -scalar_to_acb(scalars.a) * g2 * f1
                + scalar_to_acb(scalars.b) * f2 * f1
                + scalar_to_acb(scalars.d) * f2 * g1
            )
            residual = ComplexBall.from_acb(lhs - scalars.r / full_turn)
            detail[f"relation_pi_{index}"] = str(residual)
            verdicts.append(_decide(residual, tolerance))
            values.extend([f1, g1, f2, g2])
        while len(values) < len(BUNDLE_VARIABLES):
            values.append(acb(0))
        value = bundle.p_inf.evaluate(values, scalar_to_acb)
        p_inf_ball = ComplexBall.from_acb(value)
    detail["P_inf"] = str(p_inf_ball)
    verdicts.append(_decide(p_inf_ball, tolerance))

    if False in verdicts:
        return PlaceResult("inf", admissible=True, passed=False, detail=detail)
    if None in verdicts:
        return None
    return PlaceResult("inf", admissible=True, passed=True, detail=detail)


def _verify_archimedean(
    pairs: list[IsogenyPair],
    bundle: RelationBundle,
    bits: int,
    max_bits: int = MAX_BITS,
    tolerance: Fraction = ARCH_TOLERANCE,
) -> PlaceResult:
    """Relation balls at the archimedean place, doubling bits while undecided."""
    _, result = escalate_bits(
        partial(_archimedean_attempt, pairs, bundle, tolerance=tolerance),
        bits,
        max_bits,
        "archimedean relation check",
    )
    return result


def _vanishes(value: PadicNum, precision: int) -> bool:
    return value.is_zero() or value.valuation >= precision


def _verify_padic(
    pair: IsogenyPair,
    bundle: RelationBundle,
    prime: int,
    precision: int,
) -> PlaceResult:
    place = f"p={prime}"
    convert = scalar_to_padic(prime, precision + 2)
    try:
        a = convert(pair.a)
    except ValueError as exc:
        detail = {"reason": str(exc)}
        return PlaceResult(place, admissible=False, passed=False, detail=detail)

    gains = [valuation(s, prime) for s in (pair.s1, pair.s2)]
    f_series = named_series("F", math.ceil(precision / min(gains)) + 2).series
    f1, f2 = (
        eval_padic(f_series, PadicNum.from_rational(s, prime, precision + 4), precision)
        for s in (pair.s1, pair.s2)
    )
    reached = min(f1.absolute_precision, f2.absolute_precision, precision)

    vanishing = tuple(
        m
        for k in positive_divisors(pair.degree)
        for m in (k, -k)
        if _vanishes(a * f1 - m * f2, reached)
    )
    fin_value = bundle.p_fin.evaluate([f1, f2], convert)
    passed = len(vanishing) == 1 and _vanishes(fin_value, reached)
    detail = {
        "precision": str(reached),
        "F_s1": str(f1),
        "F_s2": str(f2),
        "P_fin_valuation": "zero" if fin_value.is_zero() else str(fin_value.valuation),
    }
    return PlaceResult(place, True, passed, detail, vanishing)


def multi_place_verify(
    pairs: IsogenyPair | list[IsogenyPair],
    bundle: RelationBundle,
    places: list[str | int],
    precision: int = 50,
    bits: int = DEFAULT_BITS,
    radius: Fraction = DEFAULT_DELTA_S_RADIUS,
    max_bits: int = MAX_BITS,
    tolerance: Fraction = ARCH_TOLERANCE,
) -> VerificationReport:
    """Check P_inf at the archimedean place and P_fin at each prime.

    Archimedean: relation balls contain 0 with radius at most ``tolerance``;
    balls that hold 0 but are wider are recomputed at doubled precision up to
    ``max_bits``. Non-archimedean: P_fin(F_p(s1),
    F_p(s2)) vanishes mod p^K and exactly one divisor m gives a F_p(s1) = m F_p(s2).
    Places whose convergence conditions fail are reported as inadmissible.

    Raises
    ------
    NoAdmissiblePlaceError
        If no requested place is admissible.
    PrecisionExhaustedError
        If the archimedean verdict is still undecided at ``max_bits``.

    """
    pair_list = [pairs] if isinstance(pairs, IsogenyPair) else list(pairs)
    parameters = _parameters(pair_list)
    results = []
    for place in places:
        prime = parse_place(place)
        if prime is None:
            if all(abs(s) <= radius for s in parameters):
                results.append(
                    _verify_archimedean(pair_list, bundle, bits, max_bits, tolerance)
                )
            else:
                results.append(PlaceResult("inf", admissible=False, passed=False))
            continue
        # P_fin only involves the first pair
        if all(valuation(s, prime) >= 1 for s in parameters[:2]):
            results.append(_verify_padic(pair_list[0], bundle, prime, precision))
        else:
            results.append(PlaceResult(f"p={prime}", admissible=False, passed=False))

    if not any(r.admissible for r in results):
        msg = f"No admissible place among {places}"
        raise NoAdmissiblePlaceError(msg)
    for result in results:
        if result.admissible and not result.passed:
            logger.warning("Relation check failed at %s", result.place)
    return VerificationReport(tuple(results))
