"""Command-line front end.

    majorana-berry stars  STATE.json   star listing of a spin state
    majorana-berry berry  PATH.json    Berry phase decomposition report
    majorana-berry sweep  SWEEP.json   parameter sweep table (CSV)
    majorana-berry verify              run the acceptance checks

Exit status: 0 success, 1 verification residual exceeded (or a failed
acceptance check), 2 input error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import math
import sys

from . import reports
from .acceptance import CHECKS, TOLERANCES, run_checks
from .berry_engine import DEFAULT_TOLERANCE, decompose, rigid_rotation_phase
from .errors import InvalidInputError, NumericFailureError
from .paths import DEFAULT_SAMPLES, PathSpec, build_loop, corotation_closed_form
from .sweeps import run_sweep

EXIT_OK = 0
EXIT_RESIDUAL = 1
EXIT_INPUT = 2
EXIT_NUMERIC = 3


def _read_input(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise InvalidInputError(f"cannot read {path}: {exc.strerror}") from None


def _write_output(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def cmd_stars(args) -> int:
    psi, renormalized = reports.parse_state(reports.loads(_read_input(args.input)))
    if renormalized:
        print("warning: input state renormalized", file=sys.stderr)
    doc = reports.stars_document(psi)
    text = reports.dumps(doc) if args.format == "report" else reports.stars_table(doc)
    _write_output(args.output, text)
    return EXIT_OK


def cmd_berry(args) -> int:
    spec = PathSpec.from_dict(reports.loads(_read_input(args.input)))
    if args.seed is not None:
        if spec.kind != "fourier_random":
            raise InvalidInputError("--seed only applies to fourier_random paths")
        if args.seed < 0:
            raise InvalidInputError("--seed must be >= 0")
        spec.params["seed"] = args.seed
    if args.samples is not None:
        if args.samples < 2:
            raise InvalidInputError("--samples must be >= 2")
        spec.samples = args.samples
    if spec.kind == "rigid_rotation":
        p = spec.params
        if "stars" not in p or "axis" not in p:
            raise InvalidInputError("rigid_rotation needs 'stars' and 'axis'")
        report = rigid_rotation_phase(
            p["stars"], p["axis"], float(p.get("angle", 2 * math.pi)),
            spec.samples or DEFAULT_SAMPLES, args.tolerance,
        )
    else:
        report = decompose(build_loop(spec), args.tolerance)
    closed = None
    if spec.kind == "corotation":
        p = spec.params
        closed = corotation_closed_form(
            float(p["theta1"]), float(p["theta2"]),
            float(p.get("phi1", 0.0)), float(p.get("phi2", 0.0)),
        )
    table = reports.berry_table(report, closed)
    if args.format == "report":
        _write_output(args.output, reports.dumps(reports.berry_document(report, spec.to_dict(), closed)))
        sys.stderr.write(table)
    else:
        _write_output(args.output, table)
    return EXIT_OK if report.verified else EXIT_RESIDUAL


def cmd_sweep(args) -> int:
    doc = reports.loads(_read_input(args.input))
    if args.seed is not None and args.seed < 0:
        raise InvalidInputError("--seed must be >= 0")
    if args.samples is not None and args.samples < 2:
        raise InvalidInputError("--samples must be >= 2")
    kind, columns, rows = run_sweep(doc, samples=args.samples, seed=args.seed)
    if args.format == "report":
        out = {"type": "sweep", "kind": kind, "spec": doc, "columns": columns,
               "rows": [[float(v) if not isinstance(v, int) else v for v in row] for row in rows]}
        _write_output(args.output, reports.dumps(out))
    else:
        _write_output(args.output, reports.csv_table(columns, rows))
    return EXIT_OK


def _parse_injection(items) -> dict:
    overrides = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep or key not in TOLERANCES:
            raise InvalidInputError(
                f"--inject expects KEY=VALUE with KEY one of {sorted(TOLERANCES)}")
        try:
            overrides[key] = float(value)
        except ValueError:
            raise InvalidInputError(f"--inject value for {key} must be a number") from None
    return overrides


def cmd_verify(args) -> int:
    overrides = _parse_injection(args.inject)
    only = set(args.only) if args.only else None
    unknown = (only or set()) - {num for num, _, _ in CHECKS}
    if unknown:
        raise InvalidInputError(f"no acceptance check numbered {sorted(unknown)}")
    lines = []
    failed = False
    for result in run_checks(overrides, only):
        lines.append(result.line())
        print(result.line(), file=sys.stderr, flush=True)
        failed |= not result.passed
    _write_output(args.output, "\n".join(lines) + "\n")
    return EXIT_RESIDUAL if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="majorana-berry",
        description="Berry phases of spin-j states decomposed over Majorana stars.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    io_args = argparse.ArgumentParser(add_help=False)
    io_args.add_argument("input", nargs="?", default="-",
                         help="JSON input document (default: standard input)")
    io_args.add_argument("-o", "--output", default=None, help="output path (default: standard output)")

    p = sub.add_parser("stars", parents=[io_args], help="list the Majorana stars of a spin state")
    p.add_argument("--format", choices=("report", "table"), default="table")
    p.set_defaults(func=cmd_stars)

    p = sub.add_parser("berry", parents=[io_args], help="decompose the Berry phase of a loop")
    p.add_argument("--samples", type=int, default=None, help="override the sample count")
    p.add_argument("--tolerance", type=float, default=DEFAULT_TOLERANCE,
                   help="oracle residual tolerance (default %(default)g)")
    p.add_argument("--seed", type=int, default=None, help="override the fourier_random seed")
    p.add_argument("--format", choices=("report", "table"), default="report")
    p.set_defaults(func=cmd_berry)

    p = sub.add_parser("sweep", parents=[io_args], help="emit a parameter sweep table")
    p.add_argument("--samples", type=int, default=None, help="samples per loop for loop sweeps")
    p.add_argument("--seed", type=int, default=None, help="override the random sweep seed")
    p.add_argument("--format", choices=("report", "table"), default="table")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="run the acceptance checks")
    p.add_argument("-o", "--output", default=None, help="output path (default: standard output)")
    p.add_argument("--only", type=int, nargs="+", metavar="N", help="run only these check numbers")
    p.add_argument("--inject", action="append", metavar="KEY=VALUE",
                   help="test mode: replace an acceptance tolerance")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InvalidInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericFailureError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
