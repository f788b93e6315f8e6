"""Command-line front end.

Subcommands: certify (pathwise certificates for a user-supplied path
file), mc (statistical verification on simulated martingales), grid
(deterministic plus randomized sweep of the one-step potential bounds),
scan (adversarial tightness search), continuum (discretized-Brownian
slack study).

JSON is the canonical report format; CSV is a lossy projection without
nested structures.  Every randomized command requires a seed or
generates one and prints it, and every report records the seed and the
library version, so identical invocations produce byte-identical
reports (timings are therefore kept out of emitted reports).

Exit codes: 0 success, 1 failed certification or unmet statistical
criterion, 2 configuration or parse error, 3 counterexample found (an
internal-bug signal, not a mathematical event).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import secrets
import sys
from typing import Sequence

from . import __version__
from .certificates import DEFAULT_TOLERANCE, InequalityId
from .davis import (
    aux_step_grid,
    certify_davis,
    certify_davis_sharp,
    check_aux_step_batch,
    sample_admissible_points,
)
from .bdg import P_MAX, certify_bdg
from .continuum import refinement_report, superhedge_report
from .mc import (
    SCANNABLE_INEQUALITIES,
    CounterexampleFound,
    Generator,
    bdg_bound_check,
    empirical_bdg_ratio,
    scan_tightness,
    verify_zero_integral,
)
from .paths import read_path_file

OUTPUT_DIR_ENV = "PATHINEQ_OUTPUT_DIR"

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2
EXIT_COUNTEREXAMPLE = 3


class CliError(Exception):
    """Configuration or input problem; maps to exit code 2."""


def _positive_float(text: str) -> float:
    value = float(text)
    if not (math.isfinite(value) and value > 0):
        raise argparse.ArgumentTypeError(f"expected a positive real, got {text!r}")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return value


def _nonnegative_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative integer, got {text!r}")
    return value


def _bdg_exponent(text: str) -> float:
    value = float(text)
    if not (math.isfinite(value) and 1.0 < value <= P_MAX):
        raise argparse.ArgumentTypeError(f"p must lie in (1, {P_MAX:g}], got {text!r}")
    return value


def _steps_list(text: str) -> tuple[int, ...]:
    try:
        steps = tuple(int(tok) for tok in text.split(",") if tok.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"cannot parse step list {text!r}") from exc
    if not steps or any(s < 1 for s in steps):
        raise argparse.ArgumentTypeError(f"step counts must be positive, got {text!r}")
    return steps


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pathineq",
        description="Pathwise martingale inequality certificates and their statistical verification.",
    )
    parser.add_argument("--version", action="version", version=f"pathineq {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, seeded: bool) -> None:
        p.add_argument("--tolerance", type=_positive_float, default=DEFAULT_TOLERANCE,
                       help="certificate tolerance (relative to max(1, |rhs|))")
        p.add_argument("--format", choices=("json", "csv"), default="json",
                       help="report format (JSON is canonical; CSV is a lossy projection)")
        p.add_argument("--output", default=None,
                       help=f"write the report here instead of stdout; ${OUTPUT_DIR_ENV} overrides the directory")
        p.add_argument("--threads", type=_positive_int, default=1,
                       help="cap on worker parallelism; never affects results")
        if seeded:
            p.add_argument("--seed", type=int, default=None,
                           help="64-bit seed; generated and printed when omitted")

    p_certify = sub.add_parser("certify", help="certify a path file against every applicable bound")
    p_certify.add_argument("--input", required=True, help="path file (CSV, one real per line, or JSON array)")
    p_certify.add_argument("--p", type=_bdg_exponent, action="append", default=None,
                           help=f"also certify the p-th power bounds (repeatable, p in (1, {P_MAX:g}])")
    common(p_certify, seeded=False)

    p_mc = sub.add_parser("mc", help="statistical checks on simulated martingales")
    p_mc.add_argument("--generator", choices=("srw", "gaussian_walk", "rademacher_scaled", "bm_discrete"),
                      default="srw")
    p_mc.add_argument("--sigma", type=_positive_float, default=1.0, help="gaussian_walk step scale")
    p_mc.add_argument("--length", type=_nonnegative_int, default=128)
    p_mc.add_argument("--samples", type=_positive_int, default=10000)
    p_mc.add_argument("--p", type=_bdg_exponent, default=None,
                      help="also check the p-th power moment bounds at this exponent")
    common(p_mc, seeded=True)

    p_grid = sub.add_parser("grid", help="sweep the one-step potential bounds")
    p_grid.add_argument("--samples", type=_nonnegative_int, default=0,
                        help="additional random admissible tuples beyond the deterministic grid")
    common(p_grid, seeded=True)

    p_scan = sub.add_parser("scan", help="hill-climb for near-equality paths of one inequality")
    p_scan.add_argument("--inequality", required=True,
                        choices=[iq.value for iq in SCANNABLE_INEQUALITIES])
    p_scan.add_argument("--p", type=_bdg_exponent, default=None,
                        help="exponent for the p-th power inequalities")
    p_scan.add_argument("--steps", type=_nonnegative_int, default=10000,
                        help="hill-climb iteration budget across restarts")
    p_scan.add_argument("--restarts", type=_positive_int, default=4)
    common(p_scan, seeded=True)

    p_cont = sub.add_parser("continuum", help="slack study of the constant-3/2 bound on Brownian grids")
    p_cont.add_argument("--samples", type=_positive_int, default=1000)
    p_cont.add_argument("--steps", type=_steps_list, default=(256, 1024, 4096),
                        help="comma-separated refinement ladder of grid step counts")
    p_cont.add_argument("--horizon", type=_positive_float, default=1.0)
    common(p_cont, seeded=True)

    return parser


def _resolve_seed(args: argparse.Namespace) -> int:
    seed = getattr(args, "seed", None)
    if seed is None:
        seed = secrets.randbits(64)
        print(f"pathineq: generated seed {seed}", file=sys.stderr)
    if not 0 <= seed < 2**64:
        raise CliError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


# ---------------------------------------------------------------------------
# Command handlers: each returns (exit_code, report_dict, csv_rows).
# ---------------------------------------------------------------------------


def _cmd_certify(args) -> tuple[int, dict, list[dict]]:
    try:
        path = read_path_file(args.input)
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read path file {args.input!r}: {exc}") from exc
    tol = args.tolerance
    entries = []
    cert_qv, cert_max = certify_davis(path, tol)
    entries.append({"name": "davis quadratic-variation bound", "p": None, "certificate": cert_qv})
    entries.append({"name": "davis running-max bound", "p": None, "certificate": cert_max})
    entries.append({"name": "davis sharpened quadratic-variation bound", "p": None,
                    "certificate": certify_davis_sharp(path, tol)})
    for p in args.p or ():
        bqv, bmax = certify_bdg(path, p, tol)
        entries.append({"name": f"power quadratic-variation bound (p={p:g})", "p": p, "certificate": bqv})
        entries.append({"name": f"power running-max bound (p={p:g})", "p": p, "certificate": bmax})
    all_passed = all(e["certificate"].passed for e in entries)
    report = {
        "command": "certify",
        "version": __version__,
        "input": str(args.input),
        "path_points": len(path),
        "tolerance": tol,
        "certificates": [
            {"name": e["name"], **({"p": e["p"]} if e["p"] is not None else {}), **e["certificate"].to_dict()}
            for e in entries
        ],
        "passed": all_passed,
    }
    rows = [
        {"name": e["name"], "p": "" if e["p"] is None else e["p"], **e["certificate"].to_dict()}
        for e in entries
    ]
    return (EXIT_OK if all_passed else EXIT_FAILED), report, rows


def _make_generator(args) -> Generator:
    if args.generator == "gaussian_walk":
        return Generator.gaussian_walk(sigma=args.sigma)
    if args.generator == "rademacher_scaled":
        return Generator.rademacher_scaled()
    if args.generator == "bm_discrete":
        return Generator.bm_discrete()
    return Generator.srw()


def _cmd_mc(args) -> tuple[int, dict, list[dict]]:
    seed = _resolve_seed(args)
    gen = _make_generator(args)
    zero_report = verify_zero_integral(gen, args.length, args.samples, seed)
    reports = [("zero_integral", zero_report, None)]
    checks = {"zero_integral": bool(zero_report.passed)}
    exponents = [1.0] + ([args.p] if args.p is not None else [])
    for p in exponents:
        r_qv, r_max = empirical_bdg_ratio(gen, args.length, args.samples, p, seed)
        ok_qv, ok_max = bdg_bound_check(r_qv, r_max, p)
        reports.append((f"moment_qv_p{p:g}", r_qv, p))
        reports.append((f"moment_max_p{p:g}", r_max, p))
        checks[f"moment_bounds_p{p:g}"] = bool(ok_qv and ok_max)
    passed = all(checks.values())
    report = {
        "command": "mc",
        "version": __version__,
        "generator": gen.label(),
        "length": args.length,
        "samples": args.samples,
        "seed": seed,
        "reports": {name: rep.to_dict(include_elapsed=False) for name, rep, _ in reports},
        "checks": checks,
        "passed": passed,
    }
    rows = []
    for name, rep, p in reports:
        row = {"report": name, **rep.to_dict(include_elapsed=False)}
        row.pop("extra", None)
        row["p"] = "" if p is None else p
        rows.append(row)
    return (EXIT_OK if passed else EXIT_FAILED), report, rows


def _cmd_grid(args) -> tuple[int, dict, list[dict]]:
    tol = args.tolerance
    grid = aux_step_grid(tolerance=tol)
    sections = {"grid": grid.to_dict()}
    rows = [{"section": "grid", "points": grid.points, "failures": grid.failures,
             "worst_slack_f": grid.worst_slack_f, "worst_slack_g": grid.worst_slack_g}]
    failures = grid.failures
    seed = None
    if args.samples:
        seed = _resolve_seed(args)
        x, m, q, d = sample_admissible_points(args.samples, seed)
        ok_f, ok_g, slack_f, slack_g = check_aux_step_batch(x, m, q, d, tol)
        rand_failures = int((~ok_f).sum() + (~ok_g).sum())
        failures += rand_failures
        sections["random"] = {
            "points": args.samples,
            "failures": rand_failures,
            "worst_slack_f": float(slack_f.min()),
            "worst_slack_g": float(slack_g.min()),
            "seed": seed,
        }
        rows.append({"section": "random", "points": args.samples, "failures": rand_failures,
                     "worst_slack_f": float(slack_f.min()), "worst_slack_g": float(slack_g.min())})
    report = {
        "command": "grid",
        "version": __version__,
        "tolerance": tol,
        **({"seed": seed} if seed is not None else {}),
        "sections": sections,
        "failures": failures,
        "passed": failures == 0,
    }
    return (EXIT_OK if failures == 0 else EXIT_FAILED), report, rows


def _cmd_scan(args) -> tuple[int, dict, list[dict]]:
    seed = _resolve_seed(args)
    inequality = InequalityId(args.inequality)
    needs_p = inequality in (InequalityId.BDG_QV_BOUND, InequalityId.BDG_MAX_BOUND)
    if needs_p and args.p is None:
        raise CliError(f"--inequality {inequality.value} requires --p")
    if not needs_p and args.p is not None:
        raise CliError(f"--inequality {inequality.value} does not take --p")
    result = scan_tightness(
        inequality,
        max_iters=args.steps,
        seed=seed,
        restarts=args.restarts,
        p=args.p,
        tolerance=args.tolerance,
    )
    report = {
        "command": "scan",
        "version": __version__,
        "tolerance": args.tolerance,
        "restarts": args.restarts,
        **result.to_dict(),
    }
    row = result.to_dict()
    row.pop("argmax_path")
    return EXIT_OK, report, [row]


def _cmd_continuum(args) -> tuple[int, dict, list[dict]]:
    seed = _resolve_seed(args)
    ladder = refinement_report(
        count=args.samples, steps_ladder=args.steps, horizon=args.horizon, seed=seed
    )
    hedge_ratio, hedge_sqrt = superhedge_report(
        count=args.samples, steps=max(args.steps), horizon=args.horizon, seed=seed
    )
    report = {
        "command": "continuum",
        "version": __version__,
        "seed": seed,
        "slack_refinement": ladder.to_dict(),
        "quantile_ladder_monotone": ladder.quantile_ladder_monotone(),
        "superhedge": {
            "ratio_integrand": hedge_ratio.to_dict(include_elapsed=False),
            "sqrt_integrand": hedge_sqrt.to_dict(include_elapsed=False),
        },
    }
    rows = [level.to_dict() for level in ladder.levels]
    return EXIT_OK, report, rows


# ---------------------------------------------------------------------------
# Emission.
# ---------------------------------------------------------------------------


def _render(report: dict, rows: list[dict], fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report, indent=2) + "\n"
    buf = io.StringIO()
    fieldnames: list[str] = []
    for row in rows:
        for key in row:
            if key not in fieldnames:
                fieldnames.append(key)
    writer = csv.DictWriter(buf, fieldnames=fieldnames)
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def _emit(text: str, output: str | None) -> None:
    if output is None:
        sys.stdout.write(text)
        return
    directory = os.environ.get(OUTPUT_DIR_ENV)
    if directory and not os.path.isabs(output):
        output = os.path.join(directory, output)
    parent = os.path.dirname(output)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(output, "w", encoding="utf-8") as fh:
        fh.write(text)


_HANDLERS = {
    "certify": _cmd_certify,
    "mc": _cmd_mc,
    "grid": _cmd_grid,
    "scan": _cmd_scan,
    "continuum": _cmd_continuum,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        code, report, rows = _HANDLERS[args.command](args)
    except CliError as exc:
        print(f"pathineq: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CounterexampleFound as exc:
        print(f"pathineq: counterexample found (implementation bug): {exc}", file=sys.stderr)
        return EXIT_COUNTEREXAMPLE
    except ValueError as exc:
        print(f"pathineq: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    _emit(_render(report, rows, args.format), args.output)
    return code


if __name__ == "__main__":
    sys.exit(main())
