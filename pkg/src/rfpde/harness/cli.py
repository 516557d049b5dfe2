"""Command line entry point: ``rfpde {solve,optimize,sweep,dbench} --config ... --out ...``."""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

from ..errors import DivergenceError, InvalidArgument, RfpdeError
from .config import preset_names, resolve_config
from .runs import COMMANDS, run_command

log = logging.getLogger("rfpde")

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_SOLVER = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rfpde", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "solve": "one solve at the config's hyperparameters",
        "optimize": "outer hyperparameter search over the config's space",
        "sweep": "activation / omega grid on the 1D Poisson problem",
        "dbench": "derivative networks versus finite differences",
    }
    for name in COMMANDS:
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("--config", required=True,
                       help="config file, or a preset name: " + ", ".join(preset_names()))
        p.add_argument("--seed", type=int, default=None,
                       help="overrides both the inner (solver) and outer (optimizer) seed")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("-v", "--verbose", action="store_true")
    sub.add_parser("presets", help="list packaged presets")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "presets":
        print("\n".join(preset_names()))
        return EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = resolve_config(args.config)
        if args.seed is not None:
            cfg = replace(cfg, seeds=replace(cfg.seeds, inner=args.seed, outer=args.seed))
        report = run_command(args.command, cfg, args.out)
    except (InvalidArgument, ValueError) as exc:
        print(f"rfpde {args.command}: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (DivergenceError, RfpdeError, ArithmeticError) as exc:
        print(f"rfpde {args.command}: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    for key, value in report.fvals.items():
        print(f"{key}\t{value:.6e}")
    print(f"wrote {', '.join(report.files)} to {args.out}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
