# robustHorseshoe/cli.py
"""Command-line entry point: ``python -m robustHorseshoe.cli <command> [flags]``.

Exit codes: 0 success, 2 unreadable input, 3 configuration error,
4 numeric failure.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from typing import Dict, List, Optional

from dotenv import load_dotenv

from robustHorseshoe import __version__
from robustHorseshoe.services.config import THREADS_ENV, load_config
from robustHorseshoe.services.errors import EXIT_OK, HorseshoeError, exit_code_for
from robustHorseshoe.services.experiments import COMMANDS

log = logging.getLogger("robustHorseshoe")

# flag -> config key
FLAG_KEYS = {
    "method": "method",
    "data": "data",
    "seed": "seed",
    "iters": "iters",
    "burnin": "burnin",
    "thin": "thin",
    "level": "level",
    "replicates": "replicates",
    "chains": "chains",
    "out": "out",
    "threads": "threads",
    "matrix": "matrix",
}

HELP = {
    "fit": "fit one dataset and write posterior summaries",
    "compare": "fit all methods on one dataset and tabulate selection overlap",
    "replicate": "selection/estimation metrics over simulated replicates",
    "coverage": "credible-interval coverage study (scheme=inference3)",
    "multisplit": "repeated train/test splits with held-out MAD",
    "preprocess": "filter a feature x sample expression matrix",
    "simulate": "export one simulated dataset and its truth",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="robustHorseshoe", description="Robust horseshoe Gibbs samplers")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="flat key=value config file")
    common.add_argument("--method", metavar="NAME", help="rbhs, rbhs+, rbrhs, bhs, bhs+, brhs (comma list allowed)")
    common.add_argument("--data", metavar="PATH", help="dataset CSV (first column y)")
    common.add_argument("--seed", metavar="U64")
    common.add_argument("--iters", metavar="N")
    common.add_argument("--burnin", metavar="N")
    common.add_argument("--thin", metavar="N")
    common.add_argument("--level", metavar="Q")
    common.add_argument("--replicates", metavar="N")
    common.add_argument("--chains", metavar="N")
    common.add_argument("--out", metavar="DIR")
    common.add_argument("--threads", metavar="N", help=f"worker threads (fallback: ${THREADS_ENV})")
    common.add_argument("--matrix", metavar="PATH", help="expression matrix CSV for preprocess")
    common.add_argument("--set", metavar="KEY=VALUE", action="append", default=[], help="any other config key")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=HELP[name])
    return parser


def _overrides(args: argparse.Namespace) -> Dict[str, Optional[str]]:
    out: Dict[str, Optional[str]] = {}
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise argparse.ArgumentTypeError(f"--set expects KEY=VALUE, got {item!r}")
        out[key.strip().lower()] = value
    for flag, key in FLAG_KEYS.items():
        v = getattr(args, flag)
        if v is not None:
            out[key] = v
    return out


def main(argv: Optional[List[str]] = None) -> int:
    load_dotenv()
    logging.basicConfig(level=os.getenv("LOGLEVEL", "INFO"))
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        overrides = _overrides(args)
    except argparse.ArgumentTypeError as err:
        parser.error(str(err))
    try:
        cfg = load_config(args.config, overrides)
        files = COMMANDS[args.command](cfg)
    except (HorseshoeError, OSError) as err:
        code = exit_code_for(err)
        log.error("%s failed (exit %d): %s", args.command, code, err)
        return code
    for kind, path in files.items():
        log.info("%-16s %s", kind, path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
