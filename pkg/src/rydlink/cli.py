"""Command line entry point: ``rydlink simulate | validate | presets``.

Exit codes: 0 success, 1 configuration error, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .errors import ConfigurationError, ModelError, NumericalError, PhysicsViolationError, RydlinkError
from .scenario import load_config, load_preset, preset_names, run_scan

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2

log = logging.getLogger("rydlink")


def _load(target: str):
    # a path wins over a preset of the same name
    if Path(target).exists() or target.endswith((".yaml", ".yml", ".json")):
        return load_config(target)
    return load_preset(target)


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, (ConfigurationError, ModelError)):
        return EXIT_CONFIG
    return EXIT_NUMERICAL


def cmd_simulate(args) -> int:
    config = _load(args.target)
    if args.points is not None:
        config = config.with_points(args.points)
    outcome = run_scan(config, workers=args.workers, out_dir=args.out, fmt=args.format)
    for f in outcome.files:
        print(f)
    if outcome.error is not None:
        cause = outcome.error.cause
        print(f"error: {outcome.error}", file=sys.stderr)
        print(f"partial results ({len(outcome.result.records)} points) written", file=sys.stderr)
        return _exit_code(cause)
    log.info("%d points in %.1f s", len(outcome.result.records), outcome.wall_time)
    return EXIT_OK


def cmd_validate(args) -> int:
    config = load_config(args.path)
    if args.echo:
        json.dump(config.echo(), sys.stdout, indent=2)
        print()
    else:
        scan = config.scan
        print(f"{args.path}: ok ({config.name}: {scan['type']} scan, {scan['points']} points)")
    return EXIT_OK


def cmd_presets(args) -> int:
    for name in preset_names():
        config = load_preset(name)
        print(f"{name:20s} {config.data['description'].strip().splitlines()[0] if config.data['description'] else ''}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rydlink", description="Rydberg-atom RF link simulator")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run a scan from a preset name or a config file")
    s.add_argument("target", help="preset name or path to a YAML/JSON scenario")
    s.add_argument("--points", type=int, help="override the number of scan points")
    s.add_argument("--workers", type=int, help="worker processes (default: available CPUs)")
    s.add_argument("--out", help="output directory (default: from the config)")
    s.add_argument("--format", choices=("csv", "json"), default="csv")
    s.set_defaults(func=cmd_simulate)

    v = sub.add_parser("validate", help="check a scenario file and report problems")
    v.add_argument("path")
    v.add_argument("--echo", action="store_true", help="print the resolved config with all defaults")
    v.set_defaults(func=cmd_validate)

    pr = sub.add_parser("presets", help="bundled presets")
    pr_sub = pr.add_subparsers(dest="action", required=True)
    pr_sub.add_parser("list", help="list bundled presets").set_defaults(func=cmd_presets)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigurationError, ModelError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, PhysicsViolationError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except RydlinkError as exc:  # pragma: no cover - no other subclasses today
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
