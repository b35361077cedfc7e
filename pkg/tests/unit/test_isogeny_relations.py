"""Unit tests for modular polynomials, isogenous pairs and relation bundles.

The archimedean and p-adic verification of X0(2) pairs needs full period
matrices and runs in the padic-relations suite; here the pair constructors,
homology matrices of Tate-power pairs, the relation polynomials and the
precision doubling of the archimedean check on an identity pair are checked.
"""

from __future__ import annotations

from dataclasses import replace
from fractions import Fraction

import pytest
from lib.gfunction_tools import QuadraticNumber, RelationPoly
from lib.isogeny_relations import (
    BUNDLE_VARIABLES,
    BadParameterError,
    CMPointError,
    DegenerateInputError,
    InsufficientOrderError,
    IsogenyPair,
    IsogenyScalars,
    ModularPolynomial,
    NoAdmissiblePlaceError,
    Provenance,
    RelationBundle,
    build_bundle,
    build_P_fin,
    build_P_inf,
    extract_isogeny_scalars,
    identity_pair,
    modular_polynomial,
    modular_vanishing_order,
    multi_place_verify,
    parse_place,
    psi,
    survives_diagonal,
    tate_isogeny_data,
    tate_period_matrices,
    x0_j_invariants,
    x0_pair,
)
from lib.period_lab import PeriodMatrix, PrecisionExhaustedError

# %% --------------------------------------------
# * Fixtures


@pytest.fixture(scope="module")
def phi_2() -> ModularPolynomial:
    return modular_polynomial(2, 60)


@pytest.fixture
def populated_pair() -> IsogenyPair:
    """Degree-2 pair with r = 0 and hand-picked scalars."""
    return IsogenyPair(
        2,
        Provenance.SYNTHETIC,
        s1=Fraction(1, 5000),
        s2=Fraction(1, 10000),
        a=Fraction(2),
        b=Fraction(0),
        d=Fraction(1),
        matrix=(2, 0, 0, 1),
    )


@pytest.fixture
def identity_relation_pair() -> IsogenyPair:
    """Identity of E_s with a = d = 1, b = 0: every relation ball holds 0."""
    return replace(
        identity_pair(Fraction(1, 10000)),
        a=Fraction(1),
        b=Fraction(0),
        d=Fraction(1),
        matrix=(1, 0, 0, 1),
    )


# %% --------------------------------------------
# * Modular polynomials


@pytest.mark.parametrize(("level", "expected"), [(1, 1), (2, 3), (3, 4), (6, 12)])
def test_psi(level: int, expected: int) -> None:
    assert psi(level) == expected


def test_phi_2_coefficients(phi_2: ModularPolynomial) -> None:
    assert phi_2.coefficient(0, 0) == -157464000000000
    assert phi_2.coefficient(1, 0) == 8748000000
    assert phi_2.coefficient(1, 1) == 40773375
    assert phi_2.coefficient(2, 0) == -162000
    assert phi_2.coefficient(2, 1) == 1488
    assert phi_2.coefficient(2, 2) == -1
    assert phi_2.coefficient(3, 0) == 1
    assert phi_2.is_symmetric()
    assert (phi_2.degree_x, phi_2.degree_y) == (3, 3)
    assert phi_2.to_dict()["terms"][0] == {"monomial": [3, 0], "coefficient": "1"}


def test_phi_2_vanishes_on_q_expansions(phi_2: ModularPolynomial) -> None:
    assert modular_vanishing_order(phi_2, 80) >= 80

    perturbed = dict(phi_2.coefficients)
    perturbed[(0, 0)] += 1
    broken = ModularPolynomial(2, perturbed)
    assert modular_vanishing_order(broken, 80) == 0


def test_modular_polynomial_rejects_level() -> None:
    with pytest.raises(BadParameterError):
        modular_polynomial(4, 100)


def test_modular_polynomial_needs_order() -> None:
    with pytest.raises(InsufficientOrderError):
        modular_polynomial(2, 20)


# %% --------------------------------------------
# * Isogenous pairs


def test_x0_j_invariants_lie_on_phi_2(phi_2: ModularPolynomial) -> None:
    j1, j2 = x0_j_invariants(Fraction(5))
    assert j1 == Fraction(261**3, 25)
    assert j2 == Fraction(9261, 5)
    assert phi_2.evaluate(j1, j2) == 0


def test_x0_pair() -> None:
    pair = x0_pair(5, 5)
    assert pair.degree == 2
    assert pair.provenance == Provenance.X0_PARAM
    assert pair.s1 == Fraction(25, 261**3)
    assert pair.s2 == Fraction(5, 9261)
    assert not pair.populated


@pytest.mark.parametrize(
    ("t", "prime", "error"),
    [
        (0, 5, BadParameterError),
        (-16, 5, BadParameterError),
        (5, 3, BadParameterError),
        (16, 2, CMPointError),
    ],
)
def test_x0_pair_rejections(t: int, prime: int, error: type[Exception]) -> None:
    with pytest.raises(error):
        x0_pair(t, prime)


def test_pair_consistency_checks() -> None:
    with pytest.raises(ValueError, match="determinant"):
        IsogenyPair(2, Provenance.SYNTHETIC, matrix=(1, 0, 0, 1))
    with pytest.raises(ValueError, match="a\\*d"):
        IsogenyPair(2, Provenance.SYNTHETIC, a=Fraction(1), d=Fraction(1))
    with pytest.raises(ValueError, match="not populated"):
        identity_pair(Fraction(1, 5000)).scalars()


def test_pair_dict_form() -> None:
    root = QuadraticNumber(Fraction(0), Fraction(1), 2)
    pair = IsogenyPair(
        2,
        Provenance.SYNTHETIC,
        s1=Fraction(1, 5000),
        s2=Fraction(1, 6000),
        a=root,
        b=Fraction(3, 7),
        d=root,
        matrix=(1, 0, 0, 2),
    )
    data = pair.to_dict()
    assert data["a"] == "0 + 1*sqrt(2)"
    assert IsogenyPair.from_dict(data) == pair


def test_tate_isogeny_data() -> None:
    pair = tate_isogeny_data(2, 1)
    assert pair.degree == 2
    assert pair.exponents == (2, 1)
    with pytest.raises(BadParameterError):
        tate_isogeny_data(0, 1)


def test_tate_power_homology() -> None:
    pair = tate_isogeny_data(2, 1)
    matrices = tate_period_matrices(pair, Fraction(1, 1000), bits=128)
    populated = extract_isogeny_scalars(pair, bits=128, matrices=matrices)
    p, _, r, _ = populated.matrix
    assert (p, r) == (2, 0)
    assert populated.a_ball is not None
    assert populated.a is None


def test_tate_power_homology_from_source() -> None:
    pair = tate_isogeny_data(2, 1)
    requested: list[int] = []

    def source(bits: int) -> tuple[PeriodMatrix, PeriodMatrix]:
        requested.append(bits)
        return tate_period_matrices(pair, Fraction(1, 1000), bits)

    populated = extract_isogeny_scalars(pair, bits=128, matrices=source)
    p, _, r, _ = populated.matrix
    assert (p, r) == (2, 0)
    assert requested[0] == 128


# %% --------------------------------------------
# * Relation polynomials


def test_p_fin_for_rational_a() -> None:
    relation = build_P_fin(1, 2)
    # (Y1^2 - Y2^2)(Y1^2 - 4 Y2^2)
    assert relation.degree == 4
    assert relation.coefficient((4, 0)) == 1
    assert relation.coefficient((2, 2)) == -5
    assert relation.coefficient((0, 4)) == 4
    assert relation.evaluate([Fraction(2), Fraction(1)], Fraction) == 0


def test_p_fin_for_quadratic_a() -> None:
    relation = build_P_fin(QuadraticNumber(Fraction(0), Fraction(1), 2), 2)
    assert relation.coefficient((4, 0)) == 4
    assert relation.coefficient((2, 2)) == -10


def test_p_fin_rejects_zero() -> None:
    with pytest.raises(BadParameterError):
        build_P_fin(0, 2)


def test_p_inf_linear_branch() -> None:
    scalars = IsogenyScalars(Fraction(2), Fraction(0), Fraction(1), r=0, p=2)
    relation = build_P_inf(scalars)
    assert relation.degree == 1
    assert relation.variables == BUNDLE_VARIABLES
    assert relation.coefficient((1, 0, 0, 0, 0, 0, 0, 0)) == 2
    assert relation.coefficient((0, 0, 1, 0, 0, 0, 0, 0)) == -2


def test_p_inf_quadratic_branch() -> None:
    first = IsogenyScalars(Fraction(1), Fraction(1, 3), Fraction(2), r=1)
    second = IsogenyScalars(Fraction(2), Fraction(1, 5), Fraction(1), r=2)
    relation = build_P_inf(first, second)
    assert relation.degree == 2
    # r' = 2 multiplies -a Z2 Y1
    assert relation.coefficient((1, 0, 0, 1, 0, 0, 0, 0)) == -2
    assert survives_diagonal(relation)


def test_p_inf_degenerate_inputs() -> None:
    flat = IsogenyScalars(Fraction(1), Fraction(0), Fraction(2), r=0)
    twisted = IsogenyScalars(Fraction(1), Fraction(0), Fraction(2), r=1)
    with pytest.raises(DegenerateInputError):
        build_P_inf(twisted, branch="linear")
    with pytest.raises(DegenerateInputError):
        build_P_inf(twisted)
    with pytest.raises(DegenerateInputError):
        build_P_inf(flat, flat, branch="quadratic")


def test_relation_killed_by_diagonal() -> None:
    relation = RelationPoly.linear(BUNDLE_VARIABLES, [1, 0, 0, 0, -1, 0, 0, 0])
    assert not survives_diagonal(relation)


def test_bundle_bounds(populated_pair: IsogenyPair) -> None:
    bundle = build_bundle(populated_pair)
    assert bundle.p_inf.degree == 1
    assert bundle.p_fin.degree == 4
    assert (bundle.fin_bound, bundle.inf_bound) == (4, 2)
    assert bundle.check_bounds()
    assert RelationBundle.from_dict(bundle.to_dict()) == bundle


def test_bundle_needs_second_pair_when_r_nonzero() -> None:
    pair = IsogenyPair(
        2,
        Provenance.SYNTHETIC,
        a=Fraction(1),
        b=Fraction(0),
        d=Fraction(2),
        matrix=(1, 1, 1, 3),
    )
    with pytest.raises(DegenerateInputError):
        build_bundle(pair)


def test_bundle_rejects_repeated_curves(populated_pair: IsogenyPair) -> None:
    with pytest.raises(DegenerateInputError):
        build_bundle(populated_pair, populated_pair)
    with pytest.raises(DegenerateInputError):
        build_bundle(populated_pair, replace(populated_pair, b=Fraction(1, 3)))


def test_p_inf_cancels_on_repeated_values() -> None:
    twisted = IsogenyScalars(Fraction(2), Fraction(1, 3), Fraction(1), r=1)
    other = IsogenyScalars(Fraction(3), Fraction(-1, 5), Fraction(2), r=2)
    values = [Fraction(3), Fraction(-11, 5), Fraction(7, 13), Fraction(101)] * 2
    # one pair used twice: the two halves cancel whatever the periods are
    assert build_P_inf(twisted, twisted).evaluate(values, Fraction) == 0
    assert build_P_inf(twisted, other).evaluate(values, Fraction) != 0


# %% --------------------------------------------
# * Places


@pytest.mark.parametrize(
    ("place", "expected"),
    [("inf", None), ("p=5", 5), (" 7 ", 7), (3, 3)],
)
def test_parse_place(place: str | int, expected: int | None) -> None:
    assert parse_place(place) == expected


def test_no_admissible_place(populated_pair: IsogenyPair) -> None:
    bundle = build_bundle(populated_pair)
    far = identity_pair(Fraction(1, 10))
    with pytest.raises(NoAdmissiblePlaceError):
        multi_place_verify(far, bundle, ["inf", "p=3"])


def test_place_verification_needs_parameters(populated_pair: IsogenyPair) -> None:
    bundle = build_bundle(populated_pair)
    with pytest.raises(BadParameterError):
        multi_place_verify(tate_isogeny_data(2, 1), bundle, ["inf"])


def test_archimedean_check_doubles_precision(
    identity_relation_pair: IsogenyPair,
) -> None:
    bundle = build_bundle(identity_relation_pair)
    # 128-bit balls hold 0 but are wider than 2^-160
    report = multi_place_verify(
        identity_relation_pair,
        bundle,
        ["inf"],
        bits=128,
        tolerance=Fraction(1, 2**160),
    )
    (result,) = report.results
    assert result.passed
    assert result.detail["bits"] == "256"


def test_archimedean_check_fails_without_retry(
    identity_relation_pair: IsogenyPair,
) -> None:
    wrong = replace(identity_relation_pair, b=Fraction(1))
    bundle = build_bundle(identity_relation_pair)
    report = multi_place_verify(wrong, bundle, ["inf"], bits=128)
    (result,) = report.results
    assert not result.passed
    assert result.detail["bits"] == "128"


def test_archimedean_check_precision_cap(identity_relation_pair: IsogenyPair) -> None:
    bundle = build_bundle(identity_relation_pair)
    with pytest.raises(PrecisionExhaustedError):
        multi_place_verify(
            identity_relation_pair,
            bundle,
            ["inf"],
            bits=128,
            max_bits=256,
            tolerance=Fraction(0),
        )
