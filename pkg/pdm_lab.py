#!/usr/bin/env python3
# pdm_lab.py
#
# Command-line front end for the pulse-density-modulation lab:
#   pdm-lab <experiment> --config <file> --out <dir> [--ntf first|notch] [--notch-ratio R]
#           [--side primary|secondary] [--jobs N] [--log-level LEVEL]
#
# Exit codes: 0 ok, 1 invariant violations flagged, 2 usage/config error, 3 divergent simulation,
#             4 operating-point solve did not converge.

import argparse
import logging
import sys

from config_manager import ConfigError, ExperimentConfig, load_config
from experiments import EXIT_USAGE, EXPERIMENTS, run_experiment

logger = logging.getLogger("pdm_lab")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pdm-lab",
        description="Delta-sigma pulse density modulation experiments for an SS-compensated "
                    "wireless power link. Results are written as CSV.")
    parser.add_argument("experiment", help="one of: " + ", ".join(EXPERIMENTS))
    parser.add_argument("--config", help="key = value parameter file (defaults when omitted)")
    parser.add_argument("--out", default="results", help="output directory (default: results)")
    parser.add_argument("--ntf", choices=("first", "notch"), help="override ntf_kind")
    parser.add_argument("--notch-ratio", type=float, help="notch frequency as w_e / w_s")
    parser.add_argument("--side", choices=("primary", "secondary"),
                        help="side whose bridge is pulse-density modulated")
    parser.add_argument("--jobs", type=int, help="worker threads for sweeps")
    parser.add_argument("--log-level", default="INFO",
                        choices=("DEBUG", "INFO", "WARNING", "ERROR"))
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level),
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")

    try:
        cfg = load_config(args.config) if args.config else ExperimentConfig()
        cfg = cfg.with_overrides(ntf=args.ntf, notch_ratio=args.notch_ratio, side=args.side,
                                 jobs=args.jobs)
    except ConfigError as e:
        logger.error("Configuration error: %s", e)
        return EXIT_USAGE

    return run_experiment(args.experiment, cfg, args.out)


if __name__ == "__main__":
    sys.exit(main())
