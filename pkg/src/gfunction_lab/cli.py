"""Command-line entry point of the G-function lab.

Exit codes: 0 when everything passed, 1 when a check or verification failed,
2 for usage errors.
"""

# * Creation : Oct 2026
# * License: MIT license

# %% --------------------------------------------
# * Libraries

from __future__ import annotations

import argparse
import json
import logging
import sys
from collections.abc import Callable, Sequence
from fractions import Fraction
from pathlib import Path
from typing import Any

from gfunction_lab import GFunctionLab
from lib.gfunction_tools import (
    find_functional_relations,
    find_ode,
    specialize_relation,
    weil_height,
)
from lib.isogeny_relations import (
    IsogenyPair,
    RelationBundle,
    build_bundle,
    extract_isogeny_scalars,
    modular_polynomial,
    multi_place_verify,
    x0_pair,
)
from lib.modular_qexp import SeriesName
from lib.period_lab import CurvePoint, period_matrix, reconstruct_g_series
from lib.place_eval import (
    CoefficientBound,
    PadicNum,
    eval_complex,
    eval_padic,
    valuation,
)
from lib.series_core import QSeries
from lib.suites import report_as_text

# Set up logging
logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2

# %% --------------------------------------------
# * Output


def _emit(
    payload: dict[str, Any] | str,
    out: str | None,
    output_format: str = "json",
    render: Callable[[dict[str, Any]], str] | None = None,
) -> None:
    """Write JSON (or text) to ``out`` or stdout."""
    if isinstance(payload, str):
        text = payload
    elif output_format == "text" and render is not None:
        text = render(payload)
    elif output_format == "text":
        text = "\n".join(f"{key}: {value}" for key, value in payload.items())
    else:
        text = json.dumps(payload, ensure_ascii=False, indent=2)
    if out:
        path = Path(out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text + "\n", encoding="utf-8")
        logger.info("Output written to %s", path)
    else:
        sys.stdout.write(text + "\n")


def _read_json(path: str) -> dict[str, Any]:
    with Path(path).open(encoding="utf-8") as f:
        return json.load(f)


def _load_series(lab: GFunctionLab, source: str, order: int) -> QSeries:
    """A named series, or a series cache file."""
    if source in {name.value for name in SeriesName}:
        return lab.series(source, order)
    path = Path(source)
    if not path.is_file():
        msg = f"'{source}' is neither a series name nor a cache file"
        raise ValueError(msg)
    return QSeries.from_cache_text(path.read_text(encoding="utf-8"))


# %% --------------------------------------------
# * Commands


def cmd_suite(lab: GFunctionLab, args: argparse.Namespace) -> int:
    report = lab.run_suite(
        args.name,
        out_path=args.out,
        order=args.order,
        bits=args.bits,
        primes=args.prime,
        precision=args.precision,
        samples=args.samples,
        seed=args.seed,
    )
    if args.out is None or args.format == "text":
        _emit(report, None, args.format, report_as_text)
    return EXIT_OK if report["passed"] else EXIT_FAILED


def cmd_qexp(lab: GFunctionLab, args: argparse.Namespace) -> int:
    series = lab.series(args.name, args.order)
    if args.format == "cache":
        _emit(series.to_cache_text().rstrip("\n"), args.out)
    elif args.format == "text":
        _emit(str(series), args.out)
    else:
        _emit({"name": args.name, **series.to_json()}, args.out)
    return EXIT_OK


def cmd_eval(lab: GFunctionLab, args: argparse.Namespace) -> int:
    series = _load_series(lab, args.series, args.order)
    point = Fraction(args.x)
    place = args.place.strip().lower()
    if place == "inf":
        bounds = lab.evaluation_config.get("coefficient_bounds", {})
        bound = (
            CoefficientBound.from_config(bounds[args.series])
            if args.series in bounds
            else None
        )
        value = eval_complex(series, point, bound, bits=args.precision)
        payload = {
            "value": value.describe(),
            "certified": value.certified,
            "precision": f"{args.precision} bits",
        }
    else:
        prime = int(place.removeprefix("p="))
        shift = max(valuation(point, prime), 0) if point else 0
        padic_point = PadicNum.from_rational(point, prime, args.precision + shift)
        value = eval_padic(series, padic_point, args.precision)
        payload = {
            "value": str(value),
            "certified": True,
            "precision": f"{prime}^{value.absolute_precision}",
        }
    _emit(payload, args.out, args.format)
    return EXIT_OK


def cmd_ode(lab: GFunctionLab, args: argparse.Namespace) -> int:
    series = _load_series(lab, args.series, args.order)
    operator = find_ode(series, args.max_order, args.max_degree)
    if operator is None:
        _emit({"series": args.series, "operator": None}, args.out, args.format)
        return EXIT_FAILED
    payload = {
        "series": args.series,
        "order": operator.order,
        "degree": operator.degree,
        "operator": str(operator),
        "held_out_rows": operator.held_out,
    }
    _emit(payload, args.out, args.format)
    return EXIT_OK


def cmd_relations(lab: GFunctionLab, args: argparse.Namespace) -> int:
    names = [name.strip() for name in args.series.split(",") if name.strip()]
    series = [_load_series(lab, name, args.order) for name in names]
    basis = find_functional_relations(series, args.delta, args.xdeg)
    relations = []
    for relation in basis:
        entry = relation.to_dict()
        if args.xi is not None:
            specialized, safe = specialize_relation(relation, Fraction(args.xi))
            entry["specialized"] = str(specialized)
            entry["specialization_safe"] = safe
        relations.append(entry)
    _emit({"series": names, "relations": relations}, args.out, args.format)
    return EXIT_OK


def cmd_height(_lab: GFunctionLab, args: argparse.Namespace) -> int:
    if args.minpoly:
        coefficients = [int(c) for c in args.minpoly.split(",")]
        height = weil_height(coefficients)
        subject = f"root of {coefficients}"
    elif args.value:
        height = weil_height(Fraction(args.value))
        subject = args.value
    else:
        msg = "height needs a rational value or --minpoly"
        raise ValueError(msg)
    _emit({"subject": subject, "height": height.str(20)}, args.out, args.format)
    return EXIT_OK


def cmd_verify_periods(lab: GFunctionLab, args: argparse.Namespace) -> int:
    options = lab.suite_options("periods", samples=args.samples, bits=args.bits)
    f_series = lab.series("F", options.order)
    bound = options.coefficient_bound("F")
    points = [Fraction(str(s)) for s in options.setting("sample_points", [])]
    samples = []
    passed = True
    for s in points[: options.samples]:
        matrix = period_matrix(CurvePoint(s), options.bits)
        series_value = eval_complex(f_series, s, bound, options.bits)
        ok = matrix.f_val.overlaps(series_value) and matrix.legendre_holds(
            options.bits
        )
        passed &= ok
        samples.append(
            {
                "s": str(s),
                "F_series": str(series_value),
                "F_lattice": str(matrix.f_val),
                "det_err": str(matrix.legendre_residual(options.bits)),
                "passed": ok,
            }
        )
    _emit({"bits": options.bits, "samples": samples}, args.out, args.format)
    return EXIT_OK if passed else EXIT_FAILED


def cmd_gseries(lab: GFunctionLab, args: argparse.Namespace) -> int:
    settings = lab.evaluation_config
    result = reconstruct_g_series(
        lab.series("F", args.order),
        bits=args.bits,
        degree_budget=int(settings.get("degree_budget", 8)),
        max_budget=int(settings.get("max_degree_budget", 16)),
        denominator_bound=int(settings.get("denominator_bound", 10**12)),
    )
    payload = {
        "a": str(result.a),
        "b": str(result.b),
        "held_out": {str(s): str(r) for s, r in result.held_out},
        "held_out_ok": result.held_out_ok,
        "series": result.series.to_json(),
    }
    _emit(payload, args.out, args.format)
    return EXIT_OK if result.held_out_ok else EXIT_FAILED


def cmd_modpoly(_lab: GFunctionLab, args: argparse.Namespace) -> int:
    phi = modular_polynomial(args.level, args.order)
    _emit(phi.to_dict(), args.out, args.format)
    return EXIT_OK


def cmd_pair_x0(_lab: GFunctionLab, args: argparse.Namespace) -> int:
    pair = x0_pair(Fraction(args.t), args.p)
    populated = extract_isogeny_scalars(pair, args.bits)
    _emit(populated.to_dict(), args.out, args.format)
    return EXIT_OK


def cmd_relation_build(_lab: GFunctionLab, args: argparse.Namespace) -> int:
    pair = IsogenyPair.from_dict(_read_json(args.pair_file))
    second = None
    if args.pair2_file:
        second = IsogenyPair.from_dict(_read_json(args.pair2_file))
    bundle = build_bundle(pair, second)
    if not bundle.check_bounds():
        logger.warning("Relation bundle exceeds its degree bounds")
    _emit(bundle.to_dict(), args.out, args.format)
    return EXIT_OK


def cmd_relation_verify(_lab: GFunctionLab, args: argparse.Namespace) -> int:
    bundle = RelationBundle.from_dict(_read_json(args.rel))
    pairs = [IsogenyPair.from_dict(_read_json(args.pair))]
    if args.pair2:
        pairs.append(IsogenyPair.from_dict(_read_json(args.pair2)))
    places = [place.strip() for place in args.places.split(",") if place.strip()]
    report = multi_place_verify(pairs, bundle, places, args.precision, args.bits)
    payload = {
        "passed": report.passed,
        "places": [
            {
                "place": result.place,
                "admissible": result.admissible,
                "passed": result.passed,
                "vanishing_factors": list(result.vanishing_factors),
                "detail": result.detail,
            }
            for result in report.results
        ],
    }
    _emit(payload, args.out, args.format)
    return EXIT_OK if report.passed else EXIT_FAILED


# %% --------------------------------------------
# * Parser


def _add_output(parser: argparse.ArgumentParser, formats: Sequence[str]) -> None:
    parser.add_argument("--out", help="Write the result to this file")
    parser.add_argument("--format", choices=formats, default=formats[0])


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with one subcommand per operation."""
    parser = argparse.ArgumentParser(
        prog="gfunction-lab",
        description="Exact q-expansions, period relations and verification suites.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    suite = commands.add_parser("suite", help="Run a verification suite")
    suite.add_argument("name")
    suite.add_argument("--order", type=int)
    suite.add_argument("--bits", type=int)
    suite.add_argument("--prime", type=int, action="append")
    suite.add_argument("--precision", type=int)
    suite.add_argument("--samples", type=int)
    suite.add_argument("--seed", type=int)
    _add_output(suite, ("json", "text"))
    suite.set_defaults(handler=cmd_suite)

    qexp = commands.add_parser("qexp", help="Print a named q-expansion")
    qexp.add_argument("name", choices=[name.value for name in SeriesName])
    qexp.add_argument("--order", type=int, default=20)
    _add_output(qexp, ("text", "json", "cache"))
    qexp.set_defaults(handler=cmd_qexp)

    evaluate = commands.add_parser("eval", help="Evaluate a series at a place")
    evaluate.add_argument("--series", required=True, help="Series name or cache file")
    evaluate.add_argument("--place", default="inf", help="inf or p=<prime>")
    evaluate.add_argument("--x", required=True, help="Rational point")
    evaluate.add_argument(
        "--precision",
        type=int,
        default=256,
        help="Bits at inf, p-adic digits otherwise",
    )
    evaluate.add_argument("--order", type=int, default=400)
    _add_output(evaluate, ("json", "text"))
    evaluate.set_defaults(handler=cmd_eval)

    ode = commands.add_parser("ode", help="Linear ODE discovery")
    ode_commands = ode.add_subparsers(dest="ode_command", required=True)
    guess = ode_commands.add_parser("guess")
    guess.add_argument("--series", required=True)
    guess.add_argument("--max-order", type=int, default=3)
    guess.add_argument("--max-degree", type=int, default=4)
    guess.add_argument("--order", type=int, default=400)
    _add_output(guess, ("json", "text"))
    guess.set_defaults(handler=cmd_ode)

    relations = commands.add_parser("relations", help="Functional relation search")
    relations_commands = relations.add_subparsers(
        dest="relations_command", required=True
    )
    find = relations_commands.add_parser("find")
    find.add_argument("--series", required=True, help="Comma-separated names")
    find.add_argument("--delta", type=int, default=1)
    find.add_argument("--xdeg", type=int, default=2)
    find.add_argument("--xi", help="Also specialize each relation at X = xi")
    find.add_argument("--order", type=int, default=200)
    _add_output(find, ("json", "text"))
    find.set_defaults(handler=cmd_relations)

    height = commands.add_parser("height", help="Weil height")
    height.add_argument("value", nargs="?", help="Rational p/q")
    height.add_argument("--minpoly", help='Coefficients "c0,c1,...,cd"')
    _add_output(height, ("json", "text"))
    height.set_defaults(handler=cmd_height)

    verify = commands.add_parser("verify", help="Period verification")
    verify_commands = verify.add_subparsers(dest="verify_command", required=True)
    periods = verify_commands.add_parser("periods")
    periods.add_argument("--samples", type=int)
    periods.add_argument("--bits", type=int)
    _add_output(periods, ("json", "text"))
    periods.set_defaults(handler=cmd_verify_periods)

    gseries = commands.add_parser("gseries", help="Reconstruct G from eta-periods")
    gseries.add_argument("--order", type=int, default=200)
    gseries.add_argument("--bits", type=int, default=256)
    _add_output(gseries, ("json", "text"))
    gseries.set_defaults(handler=cmd_gseries)

    modpoly = commands.add_parser("modpoly", help="Classical modular polynomial")
    modpoly.add_argument("--level", type=int, required=True)
    modpoly.add_argument("--order", type=int, default=160)
    _add_output(modpoly, ("json", "text"))
    modpoly.set_defaults(handler=cmd_modpoly)

    pair = commands.add_parser("pair", help="Isogenous pairs")
    pair_commands = pair.add_subparsers(dest="pair_command", required=True)
    x0 = pair_commands.add_parser("x0")
    x0.add_argument("--t", required=True, help="Rational Hauptmodul value")
    x0.add_argument("--p", type=int, required=True, help="Prime with v_p(s_i) >= 1")
    x0.add_argument("--bits", type=int, default=256)
    _add_output(x0, ("json", "text"))
    x0.set_defaults(handler=cmd_pair_x0)

    relation = commands.add_parser("relation", help="Relation bundles")
    relation_commands = relation.add_subparsers(dest="relation_command", required=True)
    build = relation_commands.add_parser("build")
    build.add_argument("--pair-file", required=True)
    build.add_argument("--pair2-file")
    _add_output(build, ("json", "text"))
    build.set_defaults(handler=cmd_relation_build)
    check = relation_commands.add_parser("verify")
    check.add_argument("--rel", required=True)
    check.add_argument("--pair", required=True)
    check.add_argument("--pair2")
    check.add_argument("--places", default="inf")
    check.add_argument("--precision", type=int, default=50)
    check.add_argument("--bits", type=int, default=256)
    _add_output(check, ("json", "text"))
    check.set_defaults(handler=cmd_relation_verify)

    return parser


def main(argv: Sequence[str] | None = None, lab: GFunctionLab | None = None) -> int:
    """Parse arguments, run one command and return its exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)
    if lab is None:
        lab = GFunctionLab()
    try:
        return args.handler(lab, args)
    except (ValueError, KeyError, FileNotFoundError) as exc:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    except ArithmeticError:
        logger.exception("Command %s failed", args.command)
        return EXIT_FAILED


# %% --------------------------------------------
# * Default Workflow

if __name__ == "__main__":
    from dotenv import load_dotenv

    # Read env.local (local development)
    load_dotenv(dotenv_path=GFunctionLab.project_root / ".env.local")
    sys.exit(main())
