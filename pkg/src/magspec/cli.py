"""Command-line entry point: ``magspec <command> --config run.yaml``."""
from __future__ import annotations

import argparse
import logging
import sys

from .errors import MagspecError
from .harness import COMMANDS, apply_overrides, run

log = logging.getLogger("magspec")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="magspec", description="Negative-eigenvalue counts, bounds and Hardy "
                                "constants for 2D magnetic Schroedinger operators with radial fields.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="YAML run configuration")
    p.add_argument("--out", help="output directory (overrides output.dir)")
    p.add_argument("--seed", type=int, help="seed recorded in the report")
    p.add_argument("--budget", type=float, help="wall-clock budget in seconds")
    p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                   help="set a config entry by dotted path, e.g. command.lam=10 (repeatable)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        raw = {}
        if args.config:
            import yaml
            with open(args.config) as fh:
                raw = yaml.safe_load(fh) or {}
        raw = apply_overrides(raw, args.override)
        raw.setdefault("command", {})
        if not isinstance(raw["command"], dict):
            raise MagspecError("command block must be a mapping")
        raw["command"]["name"] = args.command
        if args.seed is not None:
            raw["seed"] = args.seed
        report = run(raw, budget=args.budget)
        paths = report.write(args.out)
    except (MagspecError, OSError, ValueError) as exc:
        path = getattr(exc, "path", "")
        print(f"error{f' at {path}' if path else ''}: {exc}", file=sys.stderr)
        return 1
    for p in paths:
        log.info("wrote %s", p)
    print(report.csv_text(), end="")
    if report.partial:
        print("budget exhausted before all points were computed", file=sys.stderr)
    if not report.converged:
        print("not all counts converged", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
