"""
Argument parsing, configuration loading and exit codes.

    simulate|decompose|verify|convergence --config <path> [--out <dir>]
        [--checks name,...] [--workers N] [--print-defaults]

Exit codes: 0 success, 1 validation error, 2 numerical failure,
3 tolerance violation.
"""

import argparse
import json
import os
import sys
from dataclasses import replace
from typing import List, Optional

from cli.convergence import run_convergence
from cli.decompose import run_decompose
from cli.simulate import run_simulate
from cli.verify import CHECKS, run_verify
from core.config import ExperimentConfig
from core.errors import ConfigValidationError, LabError
from utils.logging import RunLogger

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_TOLERANCE = 3

COMMANDS = ("simulate", "decompose", "verify", "convergence")
# Commands that analyse a decomposition run start from its longer, wider defaults.
DECOMPOSITION_COMMANDS = ("decompose", "verify")


class UsageErrorParser(argparse.ArgumentParser):
    """Parser that reports usage errors as configuration errors instead of exiting."""

    def error(self, message):
        raise ConfigValidationError(f"{message}\n{self.format_usage().strip()}")


def build_parser() -> argparse.ArgumentParser:
    parser = UsageErrorParser(prog="sourcechecker", description="Numerical lab for the phase equation "
                              "phi_t + c tanh(cx/2) phi_x = phi_xx + phi_x^2.")
    parser.add_argument("command", nargs="?", choices=COMMANDS, help="workflow to run")
    parser.add_argument("--config", help="JSON configuration file (defaults when omitted)")
    parser.add_argument("--out", help="output directory (overrides output_dir)")
    parser.add_argument("--checks", help=f"comma-separated checks for verify: all, {', '.join(CHECKS)}")
    parser.add_argument("--workers", type=int, help="worker processes, 0 = all cores")
    parser.add_argument("--print-defaults", action="store_true",
                        help="print the default configuration of the command and exit")
    parser.add_argument("--quiet", action="store_true", help="log to files only")
    return parser


def command_defaults(command: Optional[str]) -> ExperimentConfig:
    if command in DECOMPOSITION_COMMANDS:
        return ExperimentConfig.for_decomposition()
    return ExperimentConfig.defaults()


def load_config(args) -> ExperimentConfig:
    base = command_defaults(args.command)
    config = ExperimentConfig.load(args.config, base) if args.config else base.validate()
    if args.out:
        config = config.with_output_dir(args.out)
    if args.workers is not None:
        if args.workers < 0:
            raise ConfigValidationError(f"--workers must be >= 0, got {args.workers}")
        config = replace(config, workers=args.workers)
    return config


def parse_checks(text: Optional[str]) -> List[str]:
    if text is None:
        return []
    return [name.strip() for name in text.split(",") if name.strip()]


def main(argv: Optional[List[str]] = None, logger: Optional[RunLogger] = None) -> int:
    """Run one command; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logger = logger or RunLogger(quiet=args.quiet)
        if args.print_defaults:
            sys.stdout.write(json.dumps(command_defaults(args.command).to_dict(), indent=2) + "\n")
            return EXIT_OK
        if args.command is None:
            raise ConfigValidationError(f"a command is required\n{parser.format_usage().strip()}")
        config = load_config(args)
        logger.enable_file_logging(os.path.join(config.output_dir, "logs", args.command))
        logger.log(f"{args.command}: output directory {config.output_dir}")
        if args.command == "simulate":
            run_simulate(config, logger)
        elif args.command == "decompose":
            run_decompose(config, logger)
        elif args.command == "verify":
            run_verify(config, parse_checks(args.checks), logger)
        else:
            run_convergence(config, logger)
        logger.log(f"{args.command} finished", "success")
        return EXIT_OK
    except LabError as e:
        logger = logger or RunLogger()
        logger.log(f"{type(e).__name__}: {e}", "error")
        return e.exit_code
