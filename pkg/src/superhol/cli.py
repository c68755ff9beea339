"""Command-line scenario runner: ``superhol run`` and ``superhol list``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, List, Optional

from . import __version__
from .config import Normalization
from .exceptions import RegistryError, SchemaError
from .scenario import RunOptions, RunReport, discover_scenarios, load_scenario, run_scenario

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def _write_json_file(path: Path, payload: Any) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")


def _emit_json(payload: Any) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True))


def _positive_float(raw: str) -> float:
    value = float(raw)
    if not value > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return value


def _positive_int(raw: str) -> int:
    value = int(raw)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="superhol",
        description="Equivariant super holonomy and the bouquet of Chern characters: scenario runner.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="log at DEBUG level")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="log warnings and errors only")
    subparsers = parser.add_subparsers(dest="command", required=True)

    run = subparsers.add_parser("run", help="Run the checks of a scenario.")
    run.add_argument("--scenario", required=True, metavar="FILE|NAME", help="scenario JSON file or built-in name")
    run.add_argument("--out", default=None, metavar="DIR", help="directory for the report and CSV/JSON artifacts")
    run.add_argument("--steps", type=_positive_int, default=None, help="RK4 steps per transport solve")
    run.add_argument("--grid", type=_positive_int, default=None, help="grid resolution per chart axis")
    run.add_argument("--normalization", choices=["raw", "chern"], default="raw")
    run.add_argument("--tolerance-scale", type=_positive_float, default=1.0)
    run.add_argument("--seed", type=int, default=0, help="seed for random sample points")
    run.add_argument("--json", action="store_true", help="print the run report as JSON")
    run.add_argument("--timings", action="store_true", help="add per-check wall-clock times to the report")

    listing = subparsers.add_parser("list", help="List built-in and registered scenarios.")
    listing.add_argument("--registry", default=None, metavar="DIR", help="directory of extra *.json scenarios")
    listing.add_argument("--json", action="store_true", help="machine-readable listing")
    return parser


def _configure_logging(args: argparse.Namespace) -> None:
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr, force=True)


def _print_report(report: RunReport) -> None:
    width = max((len(r.name) for r in report.results), default=10)
    print(f"=== {report.scenario} ===")
    for result in report.results:
        residual = "-" if result.residual is None else f"{result.residual:.3e}"
        tolerance = "-" if result.tolerance is None else f"{result.tolerance:.1e}"
        print(f"{result.status.upper():4}  {result.name:<{width}}  residual {residual:>10}  tolerance {tolerance}")
        if result.detail:
            print(f"      {result.detail}")
    summary = report.summary()
    print(f"{summary['passed']} passed, {summary['failed']} failed")


def _cmd_run(args: argparse.Namespace) -> int:
    scenario = load_scenario(args.scenario)
    options = RunOptions(
        steps=args.steps,
        grid=args.grid,
        normalization=Normalization.parse(args.normalization),
        tolerance_scale=args.tolerance_scale,
        seed=args.seed,
        out=Path(args.out) if args.out else None,
    )
    report = run_scenario(scenario, options)
    payload = report.to_json(timings=args.timings)
    out = options.out or (Path(scenario.output.directory) if scenario.output.directory else None)
    if out is not None:
        path = out / scenario.name / "report.json"
        _write_json_file(path, payload)
        logger.info("wrote %s", path)
    if args.json:
        _emit_json(payload)
    else:
        _print_report(report)
    return report.exit_code


def _cmd_list(args: argparse.Namespace) -> int:
    listing = discover_scenarios(args.registry)
    if args.json:
        _emit_json(listing)
        return 0
    width = max(len(name) for name in listing)
    for name, entry in listing.items():
        print(f"{name:<{width}}  {entry['description']}")
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "list":
            return _cmd_list(args)
    except (SchemaError, RegistryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    parser.print_usage(sys.stderr)
    return 2


if __name__ == "__main__":
    sys.exit(main())
