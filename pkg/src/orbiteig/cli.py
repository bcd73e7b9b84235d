"""Command-line front end.

Subcommands map one-to-one onto the package modules: ``eigen`` solves a
curve file, ``cone`` reports closed forms with solver cross-checks,
``certify`` runs the partition certificate, ``perturb`` scans the tilted
family, ``roundoff`` builds and solves a rounded-off curve, ``transform``
applies a surgery with a before/after report, ``optimize`` searches for a
maximizer, ``roots`` dumps a Bessel-root table, and ``reproduce-all``
runs the whole acceptance battery and writes a Markdown summary.

All JSON output is deterministic for a fixed configuration and seed and
embeds the resolved configuration plus the library version.  Exit codes:
0 success, 1 usage error, 2 precondition/domain/validation error,
3 numerical non-convergence, 4 inconclusive certificate.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import asdict

from . import __version__, bessel, cone_analysis, perturbation, reproduce
from .errors import (
    ConvergenceError,
    DomainError,
    InconclusiveCertificateError,
    PreconditionError,
    QuadratureError,
    ValidationError,
)
from .eigensolver import refine_and_extrapolate
from .geometry import (
    BoundaryOrbit,
    read_curve_csv,
    write_curve_csv,
)
from .optimizer import OptimizerConfig, compare_baselines, maximize
from .transforms import TRANSFORMS, apply_transform

USAGE_EXIT = 1
PRECONDITION_EXIT = 2
CONVERGENCE_EXIT = 3
INCONCLUSIVE_EXIT = 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        sys.exit(USAGE_EXIT)


def _emit(payload: dict, args) -> None:
    text = json.dumps(payload, indent=2)
    if args.output and args.output != "-":
        with open(args.output, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _config_dict(args, keys) -> dict:
    return {key: getattr(args, key.replace("-", "_")) for key in keys}


def _payload(args, keys, body: dict) -> dict:
    return {"config": _config_dict(args, keys), "version": __version__, **body}


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("ORBITEIG_THREADS", "1")))
    except ValueError:
        return 1


def _cmd_eigen(args) -> int:
    curve = read_curve_csv(args.curve, args.n)
    sol = refine_and_extrapolate(curve, args.p, levels=args.levels, rng_seed=args.seed)
    _emit(_payload(args, ["curve", "n", "p", "levels", "seed"], sol.to_json_dict()), args)
    return 0


def _cmd_cone(args) -> int:
    body: dict = {"closed_form_p2": cone_analysis.cone_lambda_p2(args.n, args.R)}
    if args.p == 2.0:
        from .geometry import cone_curve

        orbit = BoundaryOrbit(args.n, args.R, args.R)
        sol = refine_and_extrapolate(
            lambda N: cone_curve(orbit, N), 2.0, levels=args.levels, base_nodes=256,
        )
        body["solver"] = sol.to_json_dict()
        body["lambda"] = body["closed_form_p2"]
        body["solver_relative_error"] = abs(sol.lam - body["lambda"]) / body["lambda"]
    else:
        rep = cone_analysis.cone_ball_relation_check(args.n, args.p, levels=args.levels)
        body["relation"] = rep.to_json_dict()
        body["lambda"] = rep.lambda_cone * args.R ** (-args.p)
    _emit(_payload(args, ["n", "p", "R", "levels", "seed"], body), args)
    return 0


def _cmd_certify(args) -> int:
    cert = cone_analysis.certify(args.n, mode=args.mode)
    _emit(_payload(args, ["n", "mode"], cert.to_json_dict()), args)
    return INCONCLUSIVE_EXIT if cert.status == "inconclusive" else 0


def _cmd_perturb(args) -> int:
    s_values = tuple(float(v) for v in args.s_grid.split(",")) if args.s_grid \
        else perturbation.DEFAULT_S_GRID
    report = perturbation.perturbation_report(
        args.n, s_values=s_values, levels=args.levels, workers=_threads()
    )
    if args.format == "csv":
        rows = report.to_csv_rows()
        text = "\n".join(",".join(row) for row in rows) + "\n"
        if args.output and args.output != "-":
            with open(args.output, "w") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
        return 0
    _emit(_payload(args, ["n", "s_grid", "levels", "format"], report.to_json_dict()), args)
    return 0


def _cmd_roundoff(args) -> int:
    curve = perturbation.roundoff_curve(args.n, args.s, args.delta, args.N)
    if args.curve_out:
        write_curve_csv(curve, args.curve_out)
    sol = refine_and_extrapolate(
        lambda N: perturbation.roundoff_curve(args.n, args.s, args.delta, N),
        2.0, levels=args.levels, base_nodes=args.N,
    )
    cone = cone_analysis.cone_lambda_p2(args.n)
    body = {
        "solution": sol.to_json_dict(),
        "cone_lambda": cone,
        "margin_over_cone": sol.lam - cone,
        "curve_out": args.curve_out,
    }
    _emit(_payload(args, ["n", "s", "delta", "N", "levels"], body), args)
    return 0


def _cmd_transform(args) -> int:
    curve = read_curve_csv(args.curve, args.n)
    report = apply_transform(args.op, curve, args.p, levels=args.levels,
                             rng_seed=args.seed)
    if args.curve_out:
        write_curve_csv(report.curve_after, args.curve_out)
    body = report.to_json_dict(include_timings=args.timings)
    body["curve_before"] = args.curve
    body["curve_after"] = args.curve_out
    _emit(_payload(args, ["curve", "n", "p", "op", "levels", "seed"], body), args)
    return 0


def _cmd_optimize(args) -> int:
    orbit = BoundaryOrbit(args.n, args.x0, args.y0)
    config = OptimizerConfig(
        knots=args.knots, nodes=args.nodes, restarts=args.restarts,
        nm_max_iter=args.nm_max_iter, seed=args.seed,
    )
    result = maximize(orbit, args.p, config)
    if args.curve_out:
        write_curve_csv(result.curve, args.curve_out)
    if args.trace_out:
        with open(args.trace_out, "w") as fh:
            for step in result.trace:
                fh.write(json.dumps(step) + "\n")
    body = {
        "solution": result.solution.to_json_dict(),
        "restarts": result.restarts,
        "warnings": result.warnings,
        "curve_out": args.curve_out,
        "trace_out": args.trace_out,
    }
    if orbit.x0 == orbit.y0:
        cone = cone_analysis.cone_lambda_p2(orbit.n, orbit.x0)
        if args.p == 2.0:
            body["cone_lambda"] = cone
            body["margin_over_cone"] = result.lam - cone
    if args.baselines:
        body["baselines"] = compare_baselines(orbit, args.p, config,
                                              include_optimizer=False)
    _emit(
        _payload(
            args,
            ["n", "p", "x0", "y0", "knots", "nodes", "restarts", "nm_max_iter", "seed"],
            body,
        ),
        args,
    )
    return 0


def _cmd_roots(args) -> int:
    orders = [float(v) for v in args.orders.split(",")] if args.orders else \
        [k - 0.5 for k in range(0, args.max_half_orders + 1)]
    table = bessel.root_table(orders)
    lines = ["nu,first_root"] + [f"{nu!r},{root!r}" for nu, root in table]
    text = "\n".join(lines) + "\n"
    if args.output and args.output != "-":
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_reproduce_all(args) -> int:
    os.makedirs(args.output_dir, exist_ok=True)
    results = reproduce.run_all(workers=_threads(), suite_curves=args.suite_curves)
    payload = {
        "config": {"suite_curves": args.suite_curves},
        "version": __version__,
        "criteria": [
            {"index": r.index, "name": r.name, "passed": r.passed, "lines": r.lines}
            for r in results
        ],
        "all_passed": all(r.passed for r in results),
    }
    with open(os.path.join(args.output_dir, "results.json"), "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    md = ["# Acceptance summary", ""]
    for r in results:
        md.append(f"## {r.index}. {r.name}: {'PASS' if r.passed else 'FAIL'}")
        md.extend(f"- {line}" for line in r.lines)
        md.append("")
    with open(os.path.join(args.output_dir, "summary.md"), "w") as fh:
        fh.write("\n".join(md))
    for r in results:
        print(r.summary())
        for line in r.lines:
            print("   ", line)
    return 0 if payload["all_passed"] else 1


def build_parser() -> _Parser:
    parser = _Parser(prog="orbiteig", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed=True):
        p.add_argument("--output", "-o", default=None, help="output path (default stdout)")
        if seed:
            p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("eigen", help="solve a curve file")
    p.add_argument("--curve", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--levels", type=int, default=3)
    common(p)
    p.set_defaults(func=_cmd_eigen)

    p = sub.add_parser("cone", help="cone closed forms with solver cross-check")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--R", type=float, default=1.0)
    p.add_argument("--levels", type=int, default=4)
    common(p)
    p.set_defaults(func=_cmd_cone)

    p = sub.add_parser("certify", help="partition certificate for dimension n")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--mode", choices=["assert", "report"], default=None)
    common(p, seed=False)
    p.set_defaults(func=_cmd_certify)

    p = sub.add_parser("perturb", help="scan the tilted-segment family")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--s-grid", default=None, help="comma-separated s values")
    p.add_argument("--levels", type=int, default=3)
    p.add_argument("--format", choices=["json", "csv"], default="json")
    common(p, seed=False)
    p.set_defaults(func=_cmd_perturb)

    p = sub.add_parser("roundoff", help="rounded-off tilted curve and its eigenvalue")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--N", type=int, default=512)
    p.add_argument("--levels", type=int, default=3)
    p.add_argument("--curve-out", default=None)
    common(p, seed=False)
    p.set_defaults(func=_cmd_roundoff)

    p = sub.add_parser("transform", help="apply a surgery with a before/after report")
    p.add_argument("--curve", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--op", required=True,
                   choices=sorted(TRANSFORMS) + ["canonicalize"])
    p.add_argument("--levels", type=int, default=2)
    p.add_argument("--curve-out", default=None)
    p.add_argument("--timings", action="store_true",
                   help="include wall-clock stage timings (breaks byte-for-byte "
                        "reproducibility of the JSON)")
    common(p)
    p.set_defaults(func=_cmd_transform)

    p = sub.add_parser("optimize", help="search for an eigenvalue-maximizing curve")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--x0", type=float, required=True)
    p.add_argument("--y0", type=float, required=True)
    p.add_argument("--knots", type=int, default=12)
    p.add_argument("--nodes", type=int, default=512)
    p.add_argument("--restarts", type=int, default=8)
    p.add_argument("--nm-max-iter", type=int, default=3000)
    p.add_argument("--curve-out", default=None)
    p.add_argument("--trace-out", default=None)
    p.add_argument("--baselines", action="store_true")
    common(p)
    p.set_defaults(func=_cmd_optimize)

    p = sub.add_parser("roots", help="dump (nu, first root) table as CSV")
    p.add_argument("--orders", default=None, help="comma-separated orders")
    p.add_argument("--max-half-orders", type=int, default=8,
                   help="with no explicit orders: half-integers -1/2 .. k-1/2")
    common(p, seed=False)
    p.set_defaults(func=_cmd_roots)

    p = sub.add_parser("reproduce-all", help="run the acceptance battery")
    p.add_argument("--output-dir", default="reproduction")
    p.add_argument("--suite-curves", type=int, default=100)
    common(p, seed=False)
    p.set_defaults(func=_cmd_reproduce_all)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "mode", "unset") is None:
        args.mode = "assert" if args.n <= 5 else "report"
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return PRECONDITION_EXIT
    except (PreconditionError, DomainError, ValidationError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return PRECONDITION_EXIT
    except InconclusiveCertificateError as exc:
        sys.stderr.write(f"inconclusive: {exc}\n")
        return INCONCLUSIVE_EXIT
    except (ConvergenceError, QuadratureError) as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return CONVERGENCE_EXIT


if __name__ == "__main__":
    sys.exit(main())
