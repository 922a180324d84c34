"""Command line entry point: ``payloadguard <stage> [--config F] [--out DIR] [--seed N]``.

Exit codes: 0 success, 1 configuration error, 2 stage failure. The output
root comes from ``--out``, else ``$PAYLOADGUARD_OUT``, else the config file.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .config import ConfigError, load_config
from .pipeline import STAGES, StageError, run_stages

ENV_OUT = "PAYLOADGUARD_OUT"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="payloadguard", description="Synthetic UI payload benchmark pipeline")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="dataset_config.yaml; defaults reproduce the reference run")
    common.add_argument("--out", help=f"output root (overrides ${ENV_OUT} and the config)")
    common.add_argument("--seed", type=int, help="global seed (overrides the config)")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in [*STAGES, "all"]:
        sub.add_parser(name, parents=[common], help="run every stage in order" if name == "all" else f"run the {name} stage")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    out = args.out or os.environ.get(ENV_OUT) or None
    try:
        cfg = load_config(args.config, seed=args.seed, out=out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    names = list(STAGES) if args.command == "all" else [args.command]
    try:
        results = run_stages(cfg, names)
    except StageError as exc:
        print(f"error: {exc} (see {cfg.output_dir}/error.log)", file=sys.stderr)
        return 2
    if "report" in results:
        print(results["report"]["summary"], end="")
    else:
        print(f"{', '.join(names)}: ok -> {cfg.output_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
