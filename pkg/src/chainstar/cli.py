"""``chainstar <kind> --config <path> [--out <dir>] [--strict]``

Exit status: 0 when every physics check passes, 2 when one fails, 1 on a
usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .errors import ChainStarError, InvalidSpec, NotResonant
from .experiments import KINDS, ExperimentConfig, dump_json, run

log = logging.getLogger("chainstar")

EXIT_OK, EXIT_USAGE, EXIT_PHYSICS = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="chainstar", description="Spin-chain-star reproduction and verification runs.")
    parser.add_argument("kind", choices=KINDS)
    parser.add_argument("--config", type=Path, help="JSON experiment config (defaults per kind if omitted)")
    parser.add_argument("--out", type=Path, help="output directory (overrides config output_dir)")
    parser.add_argument("--strict", action="store_true", help="refuse detuned W/GHZ runs")
    parser.add_argument("--samples", type=int, help="time samples per period (overrides config)")
    parser.add_argument("--seed", type=int, help="seed for randomized fixtures only")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def load_config(args) -> ExperimentConfig:
    doc = {}
    if args.config is not None:
        try:
            doc = json.loads(args.config.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidSpec(f"cannot read config {args.config}: {exc}") from exc
    if args.seed is not None:
        doc["seed"] = args.seed
    if args.strict:
        doc["strict"] = True
    if args.samples is not None:
        doc.setdefault("time_grid", {})["samples"] = args.samples
    cfg = ExperimentConfig.from_dict(args.kind, doc)
    if args.out is not None:
        cfg.output_dir = args.out
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = load_config(args)
    except ChainStarError as exc:
        print(f"chainstar: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        result = run(cfg)
    except NotResonant as exc:
        print(f"chainstar: {exc}", file=sys.stderr)
        return EXIT_PHYSICS
    except ChainStarError as exc:
        print(f"chainstar: {exc}", file=sys.stderr)
        return EXIT_USAGE
    for path in result.write(cfg.output_dir):
        log.info("wrote %s", path)
    summary = {"kind": result.kind, "pass": result.passed, "output_dir": str(cfg.output_dir)}
    sys.stdout.write(dump_json(summary))
    return EXIT_OK if result.passed else EXIT_PHYSICS


if __name__ == "__main__":
    sys.exit(main())
