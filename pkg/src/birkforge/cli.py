"""Command-line front end: normalize, forge, verify, divisor-floor, stages.

All numeric parameters are exact rationals in "p/q" form; decimals are
rejected rather than rounded. Output files are written atomically and only
after the computation succeeded, and repeated runs with the same
configuration produce bit-identical bytes.

Exit codes are a stable contract:
  0 success
  2 parse/config error (bad input file, bad flags, invalid certificates)
  3 resonance detected at the working order
  4 requested order beyond the certified non-resonance order
  5 stage search exhausted (budget or analytic infeasibility)
  6 growth check failed (certificate would not pass)
  7 identity verification failed
  8 required normalization order above the feasibility ceiling
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Callable

from gmpy2 import mpq

from .divisors import build_liouville_stages, divisor_floor, dumps_stages
from .errors import (
    BirkforgeError,
    GrowthCheckFailed,
    HypothesisViolated,
    NonRealResidual,
    NormalizationOrderInfeasible,
    OrderExceedsCertification,
    ResonanceAtOrder,
    SearchBudgetExhausted,
    SeriesFormatError,
    StageCertificateInvalid,
    SymmetryViolated,
    TauTooSmall,
)
from .forge import forge, growth_report
from .normalizer import (
    ALL_AT_ONCE,
    DEGREE_BY_DEGREE,
    FrequencyVector,
    normalize,
)
from .rationals import format_rational, parse_rational
from .series import TruncatedSeries, dumps_series, loads_series
from .transform import GeneratingFunction
from .verify import (
    IdentityReport,
    verify_quadratic_correction,
    verify_reality_restriction,
    verify_singular_coefficient,
    verify_uniqueness,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RESONANCE = 3
EXIT_ORDER = 4
EXIT_BUDGET = 5
EXIT_GROWTH = 6
EXIT_IDENTITY = 7
EXIT_INFEASIBLE = 8

EXIT_CODES: tuple[tuple[type, int], ...] = (
    (SeriesFormatError, EXIT_CONFIG),
    (StageCertificateInvalid, EXIT_CONFIG),
    (NonRealResidual, EXIT_CONFIG),
    (ResonanceAtOrder, EXIT_RESONANCE),
    (OrderExceedsCertification, EXIT_ORDER),
    (SearchBudgetExhausted, EXIT_BUDGET),
    (TauTooSmall, EXIT_BUDGET),
    (GrowthCheckFailed, EXIT_GROWTH),
    (HypothesisViolated, EXIT_IDENTITY),
    (SymmetryViolated, EXIT_IDENTITY),
    (NormalizationOrderInfeasible, EXIT_INFEASIBLE),
)

STRATEGY_BY_FLAG = {"all": ALL_AT_ONCE, "by-degree": DEGREE_BY_DEGREE}

IDENTITY_CHOICES = (
    "quadratic-correction",
    "singular-coefficient",
    "uniqueness",
    "reality",
    "all",
)


def _rational_arg(text: str):
    try:
        return parse_rational(text)
    except (SeriesFormatError, ValueError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _write_text(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _read_input_series(path: str) -> TruncatedSeries:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise SeriesFormatError(f"cannot read {path}: {exc}") from exc
    return loads_series(text)


def _frequencies_of(h: TruncatedSeries) -> tuple[mpq, mpq]:
    c1 = h.coefficient((1, 0, 1, 0))
    c2 = h.coefficient((0, 1, 0, 1))
    if c1.im or c2.im or not c1.re or not c2.re:
        raise SeriesFormatError(
            "quadratic part must be l1*x1y1 + l2*x2y2 with nonzero real l1, l2"
        )
    return c1.re, c2.re


def _out_dir(args: argparse.Namespace) -> Path:
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


# -- commands -----------------------------------------------------------------


def cmd_normalize(args: argparse.Namespace) -> int:
    h = _read_input_series(args.input)
    order = args.order if args.order is not None else h.order
    lambda1, lambda2 = _frequencies_of(h)
    freq = FrequencyVector(lambda1, lambda2, order)
    strategy = STRATEGY_BY_FLAG[args.strategy]
    nf, gfs, trace = normalize(h, freq, order, strategy=strategy)
    out = _out_dir(args)
    _write_text(out / "normal_form.json", dumps_series(nf.as_series()))
    gf_payload = json.dumps(
        [gf.to_obj() for gf in gfs], sort_keys=True, indent=2
    ) + "\n"
    _write_text(out / "generating_functions.json", gf_payload)
    _write_text(out / "trace.jsonl", trace.to_jsonl())
    print(f"normalized to order {order} with {len(trace.entries)} homological solves")
    print(f"wrote {out / 'normal_form.json'}")
    print(f"wrote {out / 'generating_functions.json'}")
    print(f"wrote {out / 'trace.jsonl'}")
    return EXIT_OK


def cmd_forge(args: argparse.Namespace) -> int:
    stages = build_liouville_stages(
        args.seed_lambda1, args.tau, args.stages, search_budget=args.search_budget
    )
    result = forge(stages, max_order=args.max_order, fallback_lambda1=args.seed_lambda1)
    report = growth_report(result.certificate, result.normal_form, result.trace)
    out = _out_dir(args)
    _write_text(out / "stage_certificates.json", dumps_stages(stages))
    _write_text(out / "hamiltonian.json", dumps_series(result.hamiltonian))
    _write_text(out / "divergence_certificate.json", result.certificate.dumps())
    if args.format == "csv":
        _write_text(out / "growth.csv", report.to_csv())
        growth_name = "growth.csv"
    else:
        _write_text(
            out / "growth.json",
            json.dumps(report.to_obj(), sort_keys=True, indent=2) + "\n",
        )
        growth_name = "growth.json"
    for record in result.certificate.stages:
        print(
            f"stage {record.j}: (N, m) = ({record.N}, {record.m}), "
            f"nf coefficient {format_rational(record.nf_coeff.re)} "
            f"vs bound {int(record.bound)}, passed={str(record.passed).lower()}"
        )
    if not result.certificate.stages:
        print("no stages: quadratic Hamiltonian, empty certificate")
    for name in ("stage_certificates.json", "hamiltonian.json",
                 "divergence_certificate.json", growth_name):
        print(f"wrote {out / name}")
    return EXIT_OK


def _designated_pair(h: TruncatedSeries) -> tuple[int, int] | None:
    """Smallest designated pair x1^N y2^m in the input support, if any."""
    for pair, _ in h.terms():
        (a1, a2), (b1, b2) = pair.alpha, pair.beta
        if a1 >= 1 and a2 == 0 and b1 == 0 and b2 >= 1:
            return a1, b2
    return None


def cmd_verify(args: argparse.Namespace) -> int:
    h = _read_input_series(args.input)
    order = args.order if args.order is not None else h.order
    if order < 2:
        raise SeriesFormatError(f"verification order must be at least 2, got {order}")
    lambda1, lambda2 = _frequencies_of(h)
    selected = args.identity
    run_all = selected == "all"

    offdiag_min = h.off_diagonal().min_degree()
    pair = _designated_pair(h)

    plan: list[tuple[str, Callable[[FrequencyVector], IdentityReport], int]] = []
    skipped: list[tuple[str, str]] = []

    if selected in ("quadratic-correction",) or run_all:
        if offdiag_min is None:
            if run_all:
                skipped.append(("quadratic-correction", "input has no off-diagonal part"))
            else:
                raise SeriesFormatError(
                    "quadratic-correction needs an off-diagonal part to locate d"
                )
        else:
            d = offdiag_min
            target = 2 * d - 2
            if h.order < target:
                message = (
                    f"input order {h.order} below 2d-2 = {target} for d = {d}"
                )
                if run_all:
                    skipped.append(("quadratic-correction", message))
                else:
                    raise SeriesFormatError(message)
            else:

                def run_qc(freq: FrequencyVector, target: int = target):
                    gfs = normalize(h, freq, target, strategy=ALL_AT_ONCE)[1]
                    if not gfs:
                        raise SeriesFormatError("normalization produced no generating function")
                    return verify_quadratic_correction(h.truncated(target), gfs[0], freq)

                plan.append(("quadratic-correction", run_qc, target))

    if selected in ("singular-coefficient",) or run_all:
        if pair is None:
            message = "no designated pair x1^N y2^m in the input support"
            if run_all:
                skipped.append(("singular-coefficient", message))
            else:
                raise SeriesFormatError(message)
        else:
            big_n, small_m = pair
            target = 2 * (big_n + small_m) - 2
            if h.order < target:
                message = f"input order {h.order} below the probe order {target}"
                if run_all:
                    skipped.append(("singular-coefficient", message))
                else:
                    raise SeriesFormatError(message)
            else:

                def run_sc(freq: FrequencyVector, N: int = big_n, m: int = small_m):
                    return verify_singular_coefficient(h, freq, N, m)

                plan.append(("singular-coefficient", run_sc, target))

    if selected in ("uniqueness",) or run_all:
        plan.append(
            ("uniqueness", lambda freq: verify_uniqueness(h, freq, order), order)
        )
    if selected in ("reality",) or run_all:
        plan.append(
            ("reality", lambda freq: verify_reality_restriction(h, freq, order), order)
        )

    certified = max([2] + [needed for _, _, needed in plan])
    freq = FrequencyVector(lambda1, lambda2, certified)

    entries: list[dict] = []
    failed = False
    for name, runner, _ in plan:
        try:
            report = runner(freq)
        except (HypothesisViolated, SymmetryViolated) as exc:
            failed = True
            exponent = getattr(exc, "exponent", None)
            entries.append({"identity": name, "error": str(exc)})
            where = f" at {exponent}" if exponent is not None else ""
            print(f"{name}: FAIL (precondition violated{where})")
            continue
        entries.append(report.to_obj())
        if report.passed:
            print(f"{name}: PASS")
        else:
            failed = True
            exponent = report.first_failing_exponent()
            print(f"{name}: FAIL (first failing exponent {exponent})")
    for name, reason in skipped:
        print(f"{name}: skipped ({reason})")

    out = _out_dir(args)
    payload = json.dumps(
        {"reports": entries, "skipped": [list(s) for s in skipped]},
        sort_keys=True,
        indent=2,
    ) + "\n"
    _write_text(out / "identity_reports.json", payload)
    print(f"wrote {out / 'identity_reports.json'}")
    return EXIT_IDENTITY if failed else EXIT_OK


def cmd_divisor_floor(args: argparse.Namespace) -> int:
    if args.N < 1 or args.m < 1:
        raise SeriesFormatError("N and m must be positive integers")
    bound = args.N + args.m
    freq = FrequencyVector(args.seed_lambda1, 1, bound)
    floor = divisor_floor(freq, (args.N, 0), (0, args.m))
    obj = {
        "value": format_rational(floor.value),
        "excluded": [
            [list(pair.alpha), list(pair.beta)] for pair in floor.excluded
        ],
        "order_bound": floor.order_bound,
        "lambda1": format_rational(freq.lambda1),
        "lambda2": format_rational(freq.lambda2),
    }
    text = json.dumps(obj, sort_keys=True, indent=2) + "\n"
    print(text, end="")
    if args.output_dir is not None:
        out = _out_dir(args)
        _write_text(out / "divisor_floor.json", text)
        print(f"wrote {out / 'divisor_floor.json'}")
    return EXIT_OK


def cmd_stages(args: argparse.Namespace) -> int:
    stages = build_liouville_stages(
        args.seed_lambda1, args.tau, args.stages, search_budget=args.search_budget
    )
    out = _out_dir(args)
    _write_text(out / "stage_certificates.json", dumps_stages(stages))
    for stage in stages:
        print(
            f"stage {stage.index}: (N, m) = ({stage.N}, {stage.m}), "
            f"lambda1 = {format_rational(stage.lambda1)}, "
            f"delta = {format_rational(stage.delta.value)}"
        )
    if not stages:
        print("no stages requested")
    print(f"wrote {out / 'stage_certificates.json'}")
    return EXIT_OK


# -- wiring -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="birkforge",
        description="Exact Birkhoff normal forms and divergence certificates",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_norm = sub.add_parser("normalize", help="normalize a Hamiltonian series file")
    p_norm.add_argument("--input", required=True, help="series JSON file")
    p_norm.add_argument("--output-dir", default=".")
    p_norm.add_argument("--order", type=int, default=None)
    p_norm.add_argument("--strategy", choices=sorted(STRATEGY_BY_FLAG), default="all")
    p_norm.set_defaults(func=cmd_normalize)

    p_forge = sub.add_parser("forge", help="build the divergent Hamiltonian")
    p_forge.add_argument("--output-dir", default=".")
    p_forge.add_argument("--stages", type=int, default=1)
    p_forge.add_argument("--tau", type=_rational_arg, default=parse_rational("2/1"))
    p_forge.add_argument(
        "--seed-lambda1", type=_rational_arg, default=parse_rational("1/2")
    )
    p_forge.add_argument("--search-budget", type=int, default=100000)
    p_forge.add_argument("--max-order", type=int, default=64)
    p_forge.add_argument("--format", choices=("csv", "json"), default="csv")
    p_forge.set_defaults(func=cmd_forge)

    p_verify = sub.add_parser("verify", help="run identity verification passes")
    p_verify.add_argument("identity", nargs="?", choices=IDENTITY_CHOICES, default="all")
    p_verify.add_argument("--input", required=True)
    p_verify.add_argument("--output-dir", default=".")
    p_verify.add_argument("--order", type=int, default=None)
    p_verify.set_defaults(func=cmd_verify)

    p_floor = sub.add_parser("divisor-floor", help="exact divisor floor for a pair")
    p_floor.add_argument("N", type=int)
    p_floor.add_argument("m", type=int)
    p_floor.add_argument(
        "--seed-lambda1", type=_rational_arg, default=parse_rational("1/2")
    )
    p_floor.add_argument("--output-dir", default=None)
    p_floor.set_defaults(func=cmd_divisor_floor)

    p_stages = sub.add_parser("stages", help="build certified Liouville stages")
    p_stages.add_argument("--output-dir", default=".")
    p_stages.add_argument("--stages", type=int, default=1)
    p_stages.add_argument("--tau", type=_rational_arg, default=parse_rational("2/1"))
    p_stages.add_argument(
        "--seed-lambda1", type=_rational_arg, default=parse_rational("1/2")
    )
    p_stages.add_argument("--search-budget", type=int, default=100000)
    p_stages.set_defaults(func=cmd_stages)

    return parser


def _exit_code_for(exc: BirkforgeError) -> int:
    for cls, code in EXIT_CODES:
        if isinstance(exc, cls):
            return code
    return EXIT_CONFIG


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code
        return code if isinstance(code, int) else EXIT_CONFIG
    try:
        return args.func(args)
    except BirkforgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _exit_code_for(exc)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
