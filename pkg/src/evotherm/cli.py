"""
Command-line front end.

    evotherm run <scenario> [--out DIR] [--dry-run]
    evotherm study <kind> <scenario> --values v1,v2,... [--out DIR]
    evotherm verify <scenario>

``<scenario>`` is a JSON file or the name of a bundled scenario. Exit codes:
0 all checks pass, 1 usage or parse error, 2 verification failure, 3 solver
failure. Errors are reported on stderr as one JSON object.
"""

import argparse
import json
import os
import sys
import warnings

from .exceptions import EvothermError, ParseError, Singular, Unstable, ValidationError
from .report import add_solution_checks, certify_static
from .scenario import bundled_scenarios, load_scenario
from .solver import solve, write_fields_csv, write_trajectory_csv
from .studies import KINDS, run_study

EXIT_OK, EXIT_USAGE, EXIT_VERIFY, EXIT_SOLVER = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        _fail(EXIT_USAGE, "UsageError", message)


class _Exit(Exception):
    def __init__(self, code):
        super().__init__(code)
        self.code = code


def _fail(code, kind, message):
    print(json.dumps({"error": kind, "message": str(message), "exit_code": code}), file=sys.stderr)
    raise _Exit(code)


def _load(name):
    try:
        return load_scenario(name)
    except (ParseError, ValidationError) as exc:
        _fail(EXIT_USAGE, type(exc).__name__, exc)
    except (FileNotFoundError, IsADirectoryError) as exc:
        _fail(EXIT_USAGE, "FileNotFound", f"{exc} (bundled: {', '.join(bundled_scenarios())})")


def _assemble(scenario):
    try:
        return scenario.build_system()
    except (EvothermError, ValueError, ArithmeticError) as exc:
        _fail(EXIT_VERIFY, type(exc).__name__, f"assembly failed: {exc}")


def _write_report(out, report):
    if out is not None:
        with open(os.path.join(out, "report.json"), "w") as fh:
            fh.write(report.to_json())


def _verify(scenario, out=None, dry_run=False):
    """Assemble, certify and (unless ``dry_run``) solve; returns the exit code."""
    system = _assemble(scenario)
    report = certify_static(system, scenario.name)
    if dry_run or not report.passed:
        if not dry_run:
            report.notes.append("time stepping skipped: static verification failed")
        _write_report(out, report)
        return report, EXIT_OK if report.passed else EXIT_VERIFY
    F, Q = scenario.forcing()
    try:
        traj = solve(system, scenario.source(system), scenario.axis)
    except (Singular, Unstable) as exc:
        report.notes.append(f"error: {type(exc).__name__}: {exc}")
        _write_report(out, report)
        _fail(EXIT_SOLVER, type(exc).__name__, exc)
    fields = add_solution_checks(report, system, traj, F, Q)
    if out is not None:
        write_trajectory_csv(os.path.join(out, "trajectory.csv"), traj, scenario.outputs.get("fields"))
        write_fields_csv(os.path.join(out, "recovered.csv"), fields, scenario.outputs.get("recovered"))
    if scenario.outputs.get("report", True):
        _write_report(out, report)
    return report, EXIT_OK if report.passed else EXIT_VERIFY


def cmd_run(args):
    scenario = _load(args.scenario)
    os.makedirs(args.out, exist_ok=True)
    report, code = _verify(scenario, args.out, args.dry_run)
    status = "PASS" if report.passed else "FAIL"
    print(f"{scenario.name}: {status} ({len(report.items)} checks) -> {args.out}")
    for name in report.failures():
        print(f"  failed: {name}")
    return code


def cmd_verify(args):
    scenario = _load(args.scenario)
    report, code = _verify(scenario)
    sys.stdout.write(report.to_json())
    return code


def _parse_values(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        _fail(EXIT_USAGE, "UsageError", f"--values must be comma-separated numbers, got {text!r}")


def cmd_study(args):
    scenario = _load(args.scenario)
    values = _parse_values(args.values)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            result = run_study(args.kind, scenario, values)
    except ValidationError as exc:
        _fail(EXIT_USAGE, "ValidationError", exc)
    except (Singular, Unstable) as exc:
        _fail(EXIT_SOLVER, type(exc).__name__, exc)
    text = result.to_csv()
    sys.stdout.write(text)
    for msg in result.warnings:
        print(f"warning: NonMonotone: {msg}", file=sys.stderr)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, f"{args.kind}.csv"), "w") as fh:
            fh.write(text)
    return EXIT_OK


def build_parser():
    parser = _Parser(prog="evotherm", description="Thermoelastic evolutionary-equation simulator.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="solve a scenario and write CSV results plus a report")
    p.add_argument("scenario", help="scenario JSON file or bundled scenario name")
    p.add_argument("--out", default="evotherm-out", help="output directory (default: %(default)s)")
    p.add_argument("--dry-run", action="store_true", help="assemble and certify only")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("study", help="run a parameter study and print a CSV table")
    p.add_argument("kind", choices=KINDS)
    p.add_argument("scenario")
    p.add_argument("--values", required=True, help="comma-separated, positive, descending")
    p.add_argument("--out", default=None, help="also write <out>/<kind>.csv")
    p.set_defaults(func=cmd_study)

    p = sub.add_parser("verify", help="print the verification report as JSON")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except _Exit as exc:
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
