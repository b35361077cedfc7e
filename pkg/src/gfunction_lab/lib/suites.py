"""Module defining the verification suites and the check runner behind run_suite."""

# * Creation : Oct 2026
# * License: MIT license

# %% --------------------------------------------
# * Libraries

from __future__ import annotations

import logging
import math
import time
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field
from enum import StrEnum
from fractions import Fraction
from functools import cache
from importlib.metadata import PackageNotFoundError, version
from typing import Any

import flint
from flint import arb, fmpz

from lib.gfunction_tools import (
    check_divisor_bound,
    divisor_count,
    find_functional_relations,
    find_ode,
    hensel_series,
    specialize_relation,
    weil_height,
)
from lib.isogeny_relations import (
    IsogenyPair,
    IsogenyScalars,
    Provenance,
    build_bundle,
    build_P_fin,
    build_P_inf,
    extract_isogeny_scalars,
    modular_polynomial,
    modular_vanishing_order,
    multi_place_verify,
    psi,
    survives_diagonal,
    tate_isogeny_data,
    tate_period_matrices,
    x0_pair,
)
from lib.modular_qexp import (
    delta_series,
    eisenstein,
    growth_estimate,
    hypergeometric_f_series,
    named_series,
    tate_coefficients,
)
from lib.period_lab import (
    FALLBACK_DELTA_S_RADIUS,
    CurvePoint,
    compute_delta_s_radius,
    period_matrix,
    reconstruct_g_series,
    two_pi_i,
)
from lib.place_eval import (
    DEFAULT_BITS,
    CoefficientBound,
    ComplexBall,
    bit_precision,
    check_nonarch_lemmas,
    eval_complex,
    r_dagger,
)
from lib.series_core import QSeries, compose, sqrt_one

# Set up logging
logger = logging.getLogger(__name__)

SeriesSource = Callable[[str, int], QSeries]

# %% --------------------------------------------
# * Types


class UnknownSuiteError(ValueError):
    """Raised for a suite name outside ``SUITES``."""


class CheckStatus(StrEnum):
    PASS = "pass"
    FAIL = "fail"
    SKIP = "skip"


@dataclass(frozen=True)
class CheckOutcome:
    """What a check body returns; the runner adds name, status and timing."""

    passed: bool
    lhs: str = ""
    rhs: str = ""
    tolerance: str = "0"
    detail: dict[str, str] = field(default_factory=dict)
    skipped: bool = False


@dataclass(frozen=True)
class CheckResult:
    """One line of a suite report."""

    name: str
    status: CheckStatus
    lhs: str
    rhs: str
    tolerance: str
    elapsed_ms: int
    detail: dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        entry = {
            "name": self.name,
            "status": str(self.status),
            "lhs": self.lhs,
            "rhs": self.rhs,
            "tolerance": self.tolerance,
            "elapsed_ms": self.elapsed_ms,
        }
        if self.detail:
            entry["detail"] = dict(self.detail)
        return entry


def _generate(name: str, order: int) -> QSeries:
    return named_series(name, order).series


@dataclass(frozen=True)
class SuiteOptions:
    """Validated options of one suite run.

    ``settings`` holds the suite's configuration section merged with the
    evaluation settings; ``series_source`` returns named series (possibly
    from the on-disk cache).
    """

    order: int
    bits: int = DEFAULT_BITS
    primes: tuple[int, ...] = (2, 3, 5)
    precision: int = 40
    samples: int = 5
    seed: int = 0
    settings: Mapping[str, Any] = field(default_factory=dict)
    series_source: SeriesSource = _generate

    def __post_init__(self) -> None:
        """Reject options no suite can run with."""
        if self.order < 1:
            msg = f"--order must be positive, got {self.order}"
            raise ValueError(msg)
        if self.bits < 32:
            msg = f"--bits must be at least 32, got {self.bits}"
            raise ValueError(msg)
        if self.precision < 1:
            msg = f"--precision must be positive, got {self.precision}"
            raise ValueError(msg)
        if self.samples < 1:
            msg = f"--samples must be positive, got {self.samples}"
            raise ValueError(msg)
        for prime in self.primes:
            if prime < 2 or fmpz(prime).factor() != [(prime, 1)]:
                msg = f"--prime expects primes, got {prime}"
                raise ValueError(msg)

    def setting(self, key: str, default: Any = None) -> Any:
        return self.settings.get(key, default)

    def series(self, name: str, order: int | None = None) -> QSeries:
        return self.series_source(name, self.order if order is None else order)

    def coefficient_bound(self, name: str) -> CoefficientBound:
        bounds = self.setting("coefficient_bounds", {})
        if name not in bounds:
            msg = f"No coefficient bound configured for {name}"
            raise KeyError(msg)
        return CoefficientBound.from_config(bounds[name])

    def to_json(self) -> dict[str, Any]:
        return {
            "order": self.order,
            "bits": self.bits,
            "primes": list(self.primes),
            "precision": self.precision,
            "samples": self.samples,
            "seed": self.seed,
        }


Check = tuple[str, Callable[[], CheckOutcome]]

# %% --------------------------------------------
# * Comparison helpers


def _compare_series(lhs: QSeries, rhs: QSeries) -> CheckOutcome:
    """Coefficientwise equality with the first mismatch in the detail."""
    common = min(lhs.order, rhs.order)
    start = min(lhs.valuation_offset, rhs.valuation_offset)
    mismatch = next(
        (n for n in range(start, common + 1) if lhs[n] != rhs[n]),
        None,
    )
    detail = {"order": str(common)}
    if mismatch is not None:
        detail["first_mismatch"] = str(mismatch)
        detail["lhs_coefficient"] = str(lhs[mismatch])
        detail["rhs_coefficient"] = str(rhs[mismatch])
    return CheckOutcome(
        mismatch is None,
        lhs=f"{common + 1 - start} coefficients",
        rhs=f"{common + 1 - start} coefficients",
        detail=detail,
    )


def _compare_prefix(
    series: QSeries,
    expected: list[int],
    start: int = 0,
) -> CheckOutcome:
    found = [series[n] for n in range(start, start + len(expected))]
    return CheckOutcome(
        found == [Fraction(v) for v in expected],
        lhs=", ".join(str(c) for c in found),
        rhs=", ".join(str(c) for c in expected),
    )


def _integrality(series: QSeries) -> CheckOutcome:
    bad = next(
        (n for n, c in enumerate(series.coefficients(0)) if c.denominator != 1),
        None,
    )
    return CheckOutcome(
        bad is None,
        lhs="integral" if bad is None else f"fractional at X^{bad}",
        rhs="integral",
        detail={"order": str(series.order)},
    )


def pentagonal_delta(order: int) -> QSeries:
    """Delta = q prod (1 - q^n)^24 from Euler's pentagonal series."""
    euler = [Fraction(0)] * order
    k = 0
    while True:
        k += 1
        low, high = k * (3 * k - 1) // 2, k * (3 * k + 1) // 2
        if low >= order:
            break
        sign = -1 if k % 2 else 1
        euler[low] += sign
        if high < order:
            euler[high] += sign
    euler[0] = Fraction(1)
    product = QSeries.from_coeffs(euler, order - 1) ** 24
    return QSeries.from_coeffs([0, *product.coefficients(0)], order)


# %% --------------------------------------------
# * identities

# leading coefficients as (first index, values)
GOLDEN_PREFIXES = {
    "theta": (0, [0, 1, 744, 750420]),
    "a4_tate": (0, [0, -5, -45, -140]),
    "a6_tate": (0, [0, -1, -23, -154]),
    "j": (-1, [1, 744, 196884]),
    "alpha": (0, [1, -372, 10692]),
}


def identities_checks(options: SuiteOptions) -> list[Check]:
    order = options.order
    integral_order = int(options.setting("integrality_order", order))

    def alpha_squared() -> CheckOutcome:
        alpha = options.series("alpha")
        lhs = alpha * alpha * eisenstein("E4", order)
        return _compare_series(lhs, eisenstein("E6", order))

    def theta_inverse() -> CheckOutcome:
        theta = options.series("theta")
        return _compare_series(
            compose(theta, options.series("inv_j")),
            QSeries.variable(order),
        )

    def f_composition() -> CheckOutcome:
        return _compare_series(
            compose(options.series("alpha"), options.series("theta")),
            options.series("F"),
        )

    def f_hypergeometric() -> CheckOutcome:
        return _compare_series(options.series("F"), hypergeometric_f_series(order))

    def discriminant() -> CheckOutcome:
        e4, e6 = eisenstein("E4", order), eisenstein("E6", order)
        return _compare_series(1728 * delta_series(order), e4 * e4 * e4 - e6 * e6)

    def discriminant_product() -> CheckOutcome:
        return _compare_series(delta_series(order), pentagonal_delta(order))

    def a4_identity() -> CheckOutcome:
        a4, _ = tate_coefficients(order)
        return _compare_series(a4, -5 * options.series("s3"))

    def a6_identity() -> CheckOutcome:
        _, a6 = tate_coefficients(order)
        s3, s5 = options.series("s3"), options.series("s5")
        return _compare_series(12 * a6, -(5 * s3 + 7 * s5))

    checks: list[Check] = [
        ("alpha_squared_e4_equals_e6", alpha_squared),
        ("theta_inverts_inv_j", theta_inverse),
        ("f_equals_alpha_of_theta", f_composition),
        ("f_matches_hypergeometric_form", f_hypergeometric),
        ("discriminant_from_eisenstein", discriminant),
        ("discriminant_matches_eta_product", discriminant_product),
        ("tate_a4_identity", a4_identity),
        ("tate_a6_identity", a6_identity),
    ]
    for name, (start, expected) in GOLDEN_PREFIXES.items():
        checks.append(
            (
                f"golden_{name}",
                lambda name=name, start=start, expected=expected: _compare_prefix(
                    options.series(name, start + len(expected) - 1), expected, start
                ),
            )
        )
    for name in ("F", "theta", "alpha", "a4_tate", "a6_tate"):
        checks.append(
            (
                f"integrality_{name}",
                lambda name=name: _integrality(options.series(name, integral_order)),
            )
        )
    return checks


# %% --------------------------------------------
# * growth


def _bound_holds(series: QSeries, bound: CoefficientBound) -> CheckOutcome:
    """|a_n| <= C rho^(-n) for every known n >= 1, in exact arithmetic."""
    worst = Fraction(0)
    worst_n = 0
    for n in range(1, series.order + 1):
        scaled = abs(series[n]) * bound.radius**n
        if scaled > worst:
            worst, worst_n = scaled, n
    return CheckOutcome(
        worst <= bound.scale,
        lhs=f"max |a_n| rho^n = {float(worst):.6e} at n={worst_n}",
        rhs=f"C = {bound.scale}",
        tolerance=f"rho = {bound.radius}",
    )


def growth_checks(options: SuiteOptions) -> list[Check]:
    checks: list[Check] = []
    for name in ("F", "theta", "G"):
        checks.append(
            (
                f"coefficient_bound_{name}",
                lambda name=name: _bound_holds(
                    options.series(name), options.coefficient_bound(name)
                ),
            )
        )

    def f_growth() -> CheckOutcome:
        estimate = growth_estimate(options.series("F"))
        limit = 1 / options.coefficient_bound("F").radius
        return CheckOutcome(
            math.isfinite(estimate) and estimate <= limit,
            lhs=f"{estimate:.6f}",
            rhs=f"<= {limit}",
        )

    def f_radius_dagger() -> CheckOutcome:
        radii = {p: r_dagger(options.series("F"), p) for p in options.primes}
        ok = all(r.certified and r.exponent == 0 for r in radii.values())
        return CheckOutcome(
            ok,
            lhs=", ".join(f"p={p}: {r.exponent} ({r.basis})" for p, r in radii.items()),
            rhs="exponent 0, certified",
        )

    def branch_denominators() -> CheckOutcome:
        # y^2 = 1 + X, the branch through y(0) = 1
        branch = hensel_series({(0, 2): 1, (0, 0): -1, (1, 0): -1}, Fraction(1), 60)
        reference = sqrt_one(QSeries.from_coeffs([1, 1], 60))
        ok = branch.series.agrees_with(reference) and branch.growth <= 4
        return CheckOutcome(
            ok,
            lhs=f"denominator growth {branch.growth:.4f}",
            rhs="<= 4 and equal to (1+X)^(1/2)",
        )

    checks.extend(
        [
            ("growth_estimate_F", f_growth),
            ("radius_dagger_F", f_radius_dagger),
            ("algebraic_branch_denominators", branch_denominators),
        ]
    )
    return checks


# %% --------------------------------------------
# * nonarch-lemmas


def nonarch_checks(options: SuiteOptions) -> list[Check]:
    def lemma_check(prime: int) -> CheckOutcome:
        report = check_nonarch_lemmas(
            prime, options.samples, options.seed, options.precision
        )
        return CheckOutcome(
            report.failed == 0,
            lhs=f"{report.passed}/{report.samples} passed",
            rhs=f"{report.samples}/{report.samples} passed",
            tolerance=f"p^{options.precision}",
            detail={f"failure_{k}": text for k, text in enumerate(report.failures[:5])},
        )

    return [
        (f"nonarch_lemmas_p{prime}", lambda prime=prime: lemma_check(prime))
        for prime in options.primes
    ]


# %% --------------------------------------------
# * periods


def _sample_points(options: SuiteOptions) -> list[Fraction]:
    points = [Fraction(str(s)) for s in options.setting("sample_points", [])]
    return points[: options.samples]


def periods_checks(options: SuiteOptions) -> list[Check]:
    bits = options.bits
    max_radius = Fraction(str(options.setting("max_radius", "1e-20")))

    def f_period(s: Fraction) -> CheckOutcome:
        matrix = period_matrix(CurvePoint(s), bits)
        series_value = eval_complex(
            options.series("F"), s, options.coefficient_bound("F"), bits
        )
        radius = max(matrix.f_val.radius, series_value.radius)
        return CheckOutcome(
            matrix.f_val.overlaps(series_value) and radius < max_radius,
            lhs=str(matrix.f_val),
            rhs=str(series_value),
            tolerance=f"{float(max_radius):.0e}",
        )

    def legendre(s: Fraction) -> CheckOutcome:
        matrix = period_matrix(CurvePoint(s), bits)
        residual = matrix.legendre_residual(bits)
        return CheckOutcome(
            residual.contains(0),
            lhs=str(matrix.determinant(bits)),
            rhs="1/(2 pi i)",
            tolerance=f"{float(residual.radius):.3e}",
        )

    def delta_s_radius() -> CheckOutcome:
        search = options.setting("delta_s", {})
        radius = compute_delta_s_radius(
            int(search.get("denominator_exponent", 16)),
            int(search.get("bits", 128)),
            Fraction(str(search.get("fallback", FALLBACK_DELTA_S_RADIUS))),
        )
        return CheckOutcome(
            radius > FALLBACK_DELTA_S_RADIUS,
            lhs=str(radius),
            rhs=f"> {FALLBACK_DELTA_S_RADIUS}",
        )

    checks: list[Check] = [("delta_s_radius", delta_s_radius)]
    for s in _sample_points(options):
        checks.append((f"f_period_s={s}", lambda s=s: f_period(s)))
        checks.append((f"legendre_s={s}", lambda s=s: legendre(s)))
    checks.extend(g_reconstruction_checks(options))
    return checks


def g_reconstruction_checks(options: SuiteOptions) -> list[Check]:
    """Checks sharing one reconstruction of G from the eta-periods."""
    bits = options.bits
    state: dict[str, Any] = {}

    def result() -> Any:
        if "result" not in state:
            state["result"] = reconstruct_g_series(
                options.series("F"),
                sample_count=int(options.setting("g_sample_count", 34)),
                bits=bits,
                degree_budget=int(options.setting("degree_budget", 8)),
                max_budget=int(options.setting("max_degree_budget", 16)),
                denominator_bound=int(options.setting("denominator_bound", 10**12)),
            )
        return state["result"]

    def held_out() -> CheckOutcome:
        reconstructed = result()
        return CheckOutcome(
            reconstructed.held_out_ok,
            lhs="; ".join(f"s={s}: {r}" for s, r in reconstructed.held_out),
            rhs="0",
            detail={"a": str(reconstructed.a), "b": str(reconstructed.b)},
        )

    def matches_oracle() -> CheckOutcome:
        reconstructed = result()
        return _compare_series(reconstructed.series, options.series("G"))

    def legendre_with_g() -> CheckOutcome:
        reconstructed = result()
        s = reconstructed.held_out[0][0]
        matrix = period_matrix(CurvePoint(s), bits)
        g_value = eval_complex(
            reconstructed.series, s, options.coefficient_bound("G"), bits
        )
        with bit_precision(bits):
            f, f_star, _, g_star = matrix.as_acb()
            determinant = f * g_star - f_star * g_value.to_acb()
            residual = ComplexBall.from_acb(determinant - 1 / two_pi_i())
        return CheckOutcome(
            residual.contains(0),
            lhs=str(ComplexBall.from_acb(determinant)),
            rhs="1/(2 pi i)",
            tolerance=f"{float(residual.radius):.3e}",
            detail={"s": str(s)},
        )

    return [
        ("g_reconstruction_held_out", held_out),
        ("g_reconstruction_matches_series", matches_oracle),
        ("g_reconstruction_legendre", legendre_with_g),
    ]


# %% --------------------------------------------
# * padic-relations


def _configured_pairs(options: SuiteOptions) -> list[tuple[Fraction, tuple[int, ...]]]:
    return [
        (Fraction(str(entry["t"])), tuple(int(p) for p in entry["primes"]))
        for entry in options.setting("pairs", [])
    ]


def companion_parameter(t: Fraction, configured: list[Fraction]) -> Fraction | None:
    """First configured value after ``t``, cyclically, that differs from it."""
    if t not in configured:
        return next((other for other in configured if other != t), None)
    start = configured.index(t)
    rotated = configured[start + 1 :] + configured[:start]
    return next((other for other in rotated if other != t), None)


def _verify_pair(
    pair: IsogenyPair,
    companion: IsogenyPair | None,
    prime: int,
    precision: int,
    bits: int,
) -> tuple[bool, tuple[int, ...], dict[str, str]]:
    # P_inf of an r != 0 pair pairs its periods with those of other curves
    second = companion if pair.scalars().r != 0 else None
    bundle = build_bundle(pair, second)
    pairs = [pair] if second is None else [pair, second]
    report = multi_place_verify(pairs, bundle, ["inf", f"p={prime}"], precision, bits)
    padic = next(r for r in report.results if r.place == f"p={prime}")
    detail = {f"{r.place}": str(r.passed) for r in report.results}
    detail.update(padic.detail)
    return report.passed and padic.admissible, padic.vanishing_factors, detail


def padic_relation_checks(options: SuiteOptions) -> list[Check]:
    bits = options.bits
    higher = int(options.setting("monotonicity_precision", 2 * options.precision))

    configured = _configured_pairs(options)
    first_prime = {t: primes[0] for t, primes in configured if primes}

    @cache
    def populated(t: Fraction, prime: int) -> IsogenyPair:
        return extract_isogeny_scalars(x0_pair(t, prime), bits)

    def pair_check(t: Fraction, prime: int) -> CheckOutcome:
        pair = populated(t, prime)
        other = companion_parameter(t, list(first_prime))
        companion = None
        if other is not None:
            companion = populated(other, first_prime[other])
        passed, factors, detail = _verify_pair(
            pair, companion, prime, options.precision, bits
        )
        again, factors_again, _ = _verify_pair(pair, companion, prime, higher, bits)
        detail["matrix"] = str(pair.matrix)
        detail["companion_t"] = str(other)
        detail[f"vanishing_at_{higher}"] = str(factors_again)
        return CheckOutcome(
            passed and again and factors == factors_again and len(factors) == 1,
            lhs=f"a = {pair.a}; m = {factors}",
            rhs="exactly one m in +-divisors(M)",
            tolerance=f"{prime}^{options.precision}",
            detail=detail,
        )

    def tate_pair() -> CheckOutcome:
        pair = tate_isogeny_data(2, 1)
        q = Fraction(str(options.setting("tate_q", "1/1000")))
        tate = extract_isogeny_scalars(
            pair, bits, matrices=lambda b: tate_period_matrices(pair, q, b)
        )
        p, _, r, _ = tate.matrix
        return CheckOutcome(
            r == 0 and p == 2,
            lhs=f"matrix {tate.matrix}",
            rhs="r = 0, p = m = 2",
            detail={"a": str(tate.a_ball)},
        )

    checks: list[Check] = [("tate_power_pair_homology", tate_pair)]
    for t, primes in configured:
        checks.extend(
            (f"x0_pair_t={t}_p={prime}", lambda t=t, prime=prime: pair_check(t, prime))
            for prime in primes
        )
    return checks


# %% --------------------------------------------
# * relations


def relations_checks(options: SuiteOptions) -> list[Check]:
    order = options.order

    def ode() -> CheckOutcome:
        operator = find_ode(
            options.series("F"),
            int(options.setting("ode_max_order", 3)),
            int(options.setting("ode_max_degree", 4)),
            min_held_out=int(options.setting("ode_held_out", 100)),
        )
        if operator is None:
            return CheckOutcome(False, lhs="no operator", rhs="order <= 3")
        return CheckOutcome(
            operator.order <= 3 and operator.annihilates(options.series("F")),
            lhs=str(operator),
            rhs="annihilates F",
            detail={"held_out_rows": str(operator.held_out)},
        )

    def ode_order_two() -> CheckOutcome:
        max_degree = int(options.setting("ode_order_two_degree", 12))
        operator = find_ode(
            options.series("F"),
            2,
            max_degree,
            min_held_out=int(options.setting("ode_held_out", 100)),
        )
        if operator is None:
            return CheckOutcome(False, lhs="no operator", rhs="order 2")
        return CheckOutcome(
            operator.order == 2 and operator.annihilates(options.series("F")),
            lhs=f"order {operator.order}, degree {max_degree}",
            rhs="order 2",
            detail={"operator": str(operator)},
        )

    def planted() -> CheckOutcome:
        f, theta = options.series("F"), options.series("theta")
        x_theta = QSeries.variable(order) * theta
        basis = find_functional_relations([f, theta, f + x_theta], delta=1, xdeg=1)
        ok = len(basis) == 1 and all(
            relation.evaluate_series([f, theta, f + x_theta]).valuation > order
            for relation in basis
        )
        safe = bool(basis) and specialize_relation(basis[0], Fraction(1, 10000))[1]
        return CheckOutcome(
            ok and safe,
            lhs="; ".join(str(r) for r in basis),
            rhs="Y3 - Y1 - X*Y2 up to scaling",
        )

    def no_relation_for_f() -> CheckOutcome:
        basis = find_functional_relations([options.series("F")], delta=1, xdeg=10)
        return CheckOutcome(not basis, lhs=f"{len(basis)} relations", rhs="0 relations")

    def p_fin_degrees() -> CheckOutcome:
        found = {m: build_P_fin(Fraction(3), m).degree for m in (1, 2, 6, 12)}
        expected = {m: 2 * divisor_count(m) for m in found}
        return CheckOutcome(found == expected, lhs=str(found), rhs=str(expected))

    def p_inf_quadratic() -> CheckOutcome:
        first = IsogenyScalars(Fraction(2), Fraction(1, 3), Fraction(1), r=1, p=1)
        second = IsogenyScalars(Fraction(3), Fraction(-1, 5), Fraction(2), r=2, p=1)
        relation = build_P_inf(first, second, branch="quadratic")
        return CheckOutcome(
            not relation.is_zero and survives_diagonal(relation),
            lhs=str(relation),
            rhs="nonzero after Y1 -> Y3, Z1 -> Z3",
        )

    def scalar_identities() -> CheckOutcome:
        pairs = [
            IsogenyPair(
                2,
                Provenance.SYNTHETIC,
                Fraction(1, 10000),
                Fraction(1, 20000),
                a=Fraction(2),
                b=Fraction(1, 7),
                d=Fraction(1),
                matrix=(1, 0, 0, 2),
            ),
            IsogenyPair(
                6,
                Provenance.SYNTHETIC,
                Fraction(1, 30000),
                Fraction(1, 40000),
                a=Fraction(3),
                b=Fraction(0),
                d=Fraction(2),
                matrix=(2, 1, 0, 3),
            ),
        ]
        ok = True
        for pair in pairs:
            p, q, r, s = pair.matrix
            ok &= pair.a * pair.d == pair.degree and p * s - q * r == pair.degree
        return CheckOutcome(ok, lhs=f"{len(pairs)} pairs", rhs="a*d = M, det = M")

    return [
        ("ode_for_F", ode),
        ("ode_for_F_order_two", ode_order_two),
        ("planted_relation_recovered", planted),
        ("no_linear_relation_for_F", no_relation_for_f),
        ("p_fin_degree", p_fin_degrees),
        ("p_inf_quadratic_branch", p_inf_quadratic),
        ("isogeny_scalar_identities", scalar_identities),
    ]


# %% --------------------------------------------
# * modpoly


PHI2_CONSTANT = -157464000000000


def modpoly_checks(options: SuiteOptions) -> list[Check]:
    vanishing_order = int(options.setting("vanishing_order", 150))

    def level_check(level: int) -> CheckOutcome:
        phi = modular_polynomial(level, options.order)
        reached = modular_vanishing_order(phi, vanishing_order)
        ok = (
            phi.is_symmetric()
            and phi.degree_x == psi(level)
            and reached >= vanishing_order
        )
        return CheckOutcome(
            ok,
            lhs=f"bidegree ({phi.degree_x}, {phi.degree_y}), vanishes to q^{reached}",
            rhs=f"bidegree ({psi(level)}, {psi(level)}), q^{vanishing_order}",
            detail={"terms": str(len(phi.coefficients))},
        )

    def phi2_constant() -> CheckOutcome:
        phi = modular_polynomial(2, options.order)
        return CheckOutcome(
            phi.coefficient(0, 0) == PHI2_CONSTANT,
            lhs=str(phi.coefficient(0, 0)),
            rhs=str(PHI2_CONSTANT),
        )

    checks: list[Check] = [
        (f"phi_{level}", lambda level=level: level_check(level))
        for level in options.setting("levels", [2, 3])
    ]
    checks.append(("phi_2_constant_term", phi2_constant))
    return checks


# %% --------------------------------------------
# * heights


def heights_checks(options: SuiteOptions) -> list[Check]:
    n_max = int(options.setting("divisor_scan_max", 10**6))
    eps = float(options.setting("divisor_eps", 0.5))

    def divisor_twelve() -> CheckOutcome:
        count = divisor_count(12)
        return CheckOutcome(count == 6, lhs=str(count), rhs="6")

    def divisor_scan() -> CheckOutcome:
        report = check_divisor_bound(eps, n_max)
        return CheckOutcome(
            math.isfinite(report.max_ratio),
            lhs=f"{report.max_ratio:.6f} at N={report.argmax}",
            rhs="finite",
            detail={"divisors_at_argmax": str(report.divisors_at_argmax)},
        )

    def rational_height() -> CheckOutcome:
        height = weil_height(Fraction(2, 3))
        with bit_precision(128):
            expected = arb(3).log()
            ok = height.overlaps(expected)
        return CheckOutcome(ok, lhs=height.str(20), rhs="log 3")

    def golden_height() -> CheckOutcome:
        tolerance = Fraction(1, 10**12)
        height = weil_height([-1, -1, 1], tolerance=tolerance)
        with bit_precision(128):
            golden = (1 + arb(5).sqrt()) / 2
            expected = golden.log() / 2
            ok = height.overlaps(expected) and height.rad() < float(tolerance)
        return CheckOutcome(
            ok,
            lhs=height.str(20),
            rhs=expected.str(20),
            tolerance="1e-12",
        )

    return [
        ("divisor_count_12", divisor_twelve),
        ("divisor_bound_scan", divisor_scan),
        ("height_two_thirds", rational_height),
        ("height_golden_ratio_root", golden_height),
    ]


# %% --------------------------------------------
# * Runner


SUITES: dict[str, Callable[[SuiteOptions], list[Check]]] = {
    "identities": identities_checks,
    "growth": growth_checks,
    "nonarch-lemmas": nonarch_checks,
    "periods": periods_checks,
    "padic-relations": padic_relation_checks,
    "relations": relations_checks,
    "modpoly": modpoly_checks,
    "heights": heights_checks,
}


def suite_checks(name: str, options: SuiteOptions) -> list[Check]:
    """Check bodies of a suite.

    Raises
    ------
    UnknownSuiteError
        If ``name`` is not a known suite.

    """
    try:
        builder = SUITES[name]
    except KeyError as exc:
        msg = f"Unknown suite '{name}'; choose from {', '.join(SUITES)}"
        raise UnknownSuiteError(msg) from exc
    return builder(options)


def run_checks(checks: list[Check]) -> list[CheckResult]:
    """Run every check once; a raising body is recorded as a failure."""
    names = [name for name, _ in checks]
    if len(set(names)) != len(names):
        msg = "Check names within a suite must be unique"
        raise ValueError(msg)

    results = []
    for name, body in checks:
        start = time.perf_counter()
        try:
            outcome = body()
        except Exception as exc:
            logger.warning("Check %s raised %s: %s", name, type(exc).__name__, exc)
            outcome = CheckOutcome(
                passed=False,
                detail={"error": f"{type(exc).__name__}: {exc}"},
            )
        elapsed_ms = int((time.perf_counter() - start) * 1000)
        if outcome.skipped:
            status = CheckStatus.SKIP
        elif outcome.passed:
            status = CheckStatus.PASS
        else:
            status = CheckStatus.FAIL
            logger.warning("Check %s failed: %s vs %s", name, outcome.lhs, outcome.rhs)
        logger.debug("Check %s: %s in %d ms", name, status, elapsed_ms)
        results.append(
            CheckResult(
                name,
                status,
                outcome.lhs,
                outcome.rhs,
                outcome.tolerance,
                elapsed_ms,
                outcome.detail,
            )
        )
    return sorted(results, key=lambda result: result.name)


def toolchain_info(options: SuiteOptions) -> dict[str, Any]:
    try:
        package_version = version("gfunction-lab")
    except PackageNotFoundError:
        package_version = "unknown"
    return {
        "version": package_version,
        "python_flint": flint.__version__,
        "seed": options.seed,
        "settings": options.to_json(),
    }


def build_report(
    suite: str,
    results: list[CheckResult],
    options: SuiteOptions,
) -> dict[str, Any]:
    failed = sum(r.status == CheckStatus.FAIL for r in results)
    return {
        "suite": suite,
        "passed": failed == 0,
        "checks": [r.to_dict() for r in results],
        "toolchain": toolchain_info(options),
    }


def report_as_text(report: Mapping[str, Any]) -> str:
    """Plain-text rendering of a report, one line per check."""
    lines = [f"suite {report['suite']}: {'PASS' if report['passed'] else 'FAIL'}"]
    for check in report["checks"]:
        lines.append(
            f"  [{check['status']:>4}] {check['name']} ({check['elapsed_ms']} ms)"
        )
        if check["status"] != CheckStatus.PASS:
            lines.append(f"         lhs: {check['lhs']}")
            lines.append(f"         rhs: {check['rhs']}")
            lines.extend(
                f"         {key}: {value}"
                for key, value in check.get("detail", {}).items()
            )
    return "\n".join(lines)
