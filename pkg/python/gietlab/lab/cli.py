"""Command line interface.

    gietlab run E2 --config golden.json --set seed=3 -v
    gietlab search-loops --permutation 4 3 2 1 --max-len 10
    gietlab show out/E2/golden-seed0/summary.json

Exit codes: 0 pass, 1 suite failure, 2 config error, 3 numerical-domain error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Sequence

from gietlab import io
from gietlab.combinatorics import Permutation, enumerate_loops, is_admissible_fixed_point
from gietlab.exceptions import ConfigError, GietLabError
from gietlab.lab.config import load_config, resolve_system
from gietlab.lab.experiments import EXPERIMENTS, artifact_directory, run_experiment

logger = logging.getLogger(__name__)

EXIT_PASS = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

LOG_FORMAT = "%(levelname)s %(name)s %(message)s"
CONSOLE_HANDLER = "gietlab-console"


def configure_logging(verbosity: int) -> None:
    """Console logging on stderr: WARNING by default, -v INFO, -vv DEBUG."""
    level = logging.WARNING if verbosity <= 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    root = logging.getLogger()
    for existing in [h for h in root.handlers if h.get_name() == CONSOLE_HANDLER]:
        root.removeHandler(existing)
    handler = logging.StreamHandler(sys.stderr)
    handler.set_name(CONSOLE_HANDLER)
    handler.setLevel(level)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    root.addHandler(handler)
    root.setLevel(level)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gietlab",
        description="Numerical laboratory for GIET renormalisation.",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v INFO, -vv DEBUG")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="run one experiment")
    run.add_argument("experiment", type=str.upper, choices=sorted(EXPERIMENTS))
    run.add_argument("--config", type=Path, default=None, help="JSON config file")
    run.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a config field, e.g. --set shadowing.radius=1e-3",
    )
    run.add_argument("--output-dir", type=Path, default=None)

    search = commands.add_parser("search-loops", help="list admissible Rauzy loops")
    search.add_argument("--permutation", type=int, nargs="+", required=True, metavar="S")
    search.add_argument("--max-len", type=int, default=10)
    search.add_argument("--all", action="store_true", help="also list rejected loops")

    show = commands.add_parser("show", help="print an artifact")
    show.add_argument("artifact", type=Path)
    show.add_argument("--rows", type=int, default=20)
    return parser


def _run(args: argparse.Namespace) -> int:
    config = load_config(args.config, args.overrides)
    loop = resolve_system(config.system)
    directory = artifact_directory(args.experiment, config, args.output_dir)
    directory.mkdir(parents=True, exist_ok=True)
    handler = logging.FileHandler(directory / "run.log", mode="w")
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    root = logging.getLogger()
    handler.setLevel(logging.DEBUG if args.verbose >= 2 else logging.INFO)
    if root.level > handler.level:
        root.setLevel(handler.level)
    root.addHandler(handler)
    try:
        result = run_experiment(args.experiment, config, args.output_dir, loop=loop)
    finally:
        root.removeHandler(handler)
        handler.close()
    print(json.dumps(io.to_jsonable(result.to_dict()), indent=2, sort_keys=True))
    if result.error is not None:
        return EXIT_CONFIG if result.error["type"] == "ConfigError" else EXIT_NUMERICAL
    return EXIT_PASS if result.passed else EXIT_FAILURE


def _search(args: argparse.Namespace) -> int:
    try:
        pi = Permutation(tuple(args.permutation))
        pi.require_irreducible()
    except GietLabError as exc:
        raise ConfigError(str(exc), key="permutation", value=args.permutation) from exc
    found = 0
    print("loop,length,perron_value,genus,marked_points,admissible,flags")
    for loop in enumerate_loops(pi, args.max_len):
        report = is_admissible_fixed_point(loop)
        ok = report.accepted if report.genus >= 2 else report.usable
        found += ok
        if ok or args.all:
            print(
                f"{loop.code},{len(loop)},{report.perron_value:.15g},{report.genus},"
                f"{report.marked_points},{ok},{'; '.join(report.flags)}"
            )
    return EXIT_PASS if found else EXIT_FAILURE


def _show(args: argparse.Namespace) -> int:
    path: Path = args.artifact
    if path.is_dir():
        path = path / "summary.json"
    if not path.exists():
        raise ConfigError(f"No artifact at {path}", key="artifact", value=str(path))
    if path.suffix == ".csv":
        print(io.read_csv(path).head(args.rows).to_string(index=False))
    elif path.suffix == ".jsonl":
        for record in io.read_jsonl(path)[: args.rows]:
            print(json.dumps(record, sort_keys=True))
    else:
        print(json.dumps(io.read_json(path), indent=2, sort_keys=True))
    return EXIT_PASS


COMMANDS = {"run": _run, "search-loops": _search, "show": _show}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        logger.error("config error: %s", exc)
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GietLabError as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
