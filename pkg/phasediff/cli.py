import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from .debug import print_debug_report
from .errors import UnknownScenarioError
from .executor import run_plan
from .experiment import ExperimentConfig
from .log import configure_logging
from .runtime import runtime
from .scenarios import SCENARIOS, default_config, emit_default_config, list_scenarios, load_config

logger = logging.getLogger(__name__)

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_USAGE = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="phasediff",
        description="Numerical experiments for the phase-space diffusion model.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="Run one scenario, or all of them.")
    run.add_argument("scenario", help="Scenario name or 'all'.")
    run.add_argument("--config", help="Configuration file for a single scenario.")
    run.add_argument("--out", help="Output directory (default: the config's output, or 'results').")
    run.add_argument("--seed", type=int, help="Master seed; each scenario gets its own child seed.")
    run.add_argument("--threads", type=int, help="Scenarios run concurrently and FFT workers per call.")
    run.add_argument("--error-mode", choices=("raise", "return"), default="return",
                     help="Record a raising scenario as a failed row, or let the exception through.")
    run.add_argument("--debug", action="store_true", help="Print the run plan before starting.")
    run.add_argument("--log-level", help="Logging level for the phasediff logger.")

    commands.add_parser("list", help="List the scenarios.")

    emit = commands.add_parser("default-config", help="Print a scenario's default configuration.")
    emit.add_argument("scenario")
    return parser


def _configs_for(args: argparse.Namespace) -> List[ExperimentConfig]:
    if args.config:
        config = load_config(args.config)
        if args.scenario != config.scenario:
            raise ValueError(
                f"--config describes scenario '{config.scenario}', not '{args.scenario}'"
            )
        return [config]
    if args.scenario == "all":
        return [default_config(name) for name in SCENARIOS]
    return [default_config(args.scenario)]


def _run(args: argparse.Namespace) -> int:
    if args.threads is not None and args.threads < 1:
        raise ValueError(f"--threads must be a positive integer, got {args.threads}")
    if args.seed is not None and args.seed < 0:
        raise ValueError(f"--seed must be non-negative, got {args.seed}")
    runtime.configure(threads=args.threads, log_level=args.log_level)
    configure_logging(runtime.setting("log_level"))

    configs = _configs_for(args)
    out = Path(args.out or (configs[0].output if len(configs) == 1 else "results"))
    threads = runtime.setting("threads")
    if args.debug:
        print_debug_report(configs, threads, args.seed, runtime.snapshot())

    table = run_plan(configs, out, seed=args.seed, threads=threads, error_mode=args.error_mode)
    if len(configs) > 1:
        table.write_csv(out / "results.csv")
        table.write_summary(out / "summary.txt")
    sys.stdout.write(table.summary())
    return EXIT_PASS if table.passed else EXIT_FAIL


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "list":
            sys.stdout.write(list_scenarios())
            return EXIT_PASS
        if args.command == "default-config":
            sys.stdout.write(emit_default_config(args.scenario))
            return EXIT_PASS
        return _run(args)
    except (UnknownScenarioError, ValueError, OSError) as exc:
        sys.stderr.write(f"phasediff: error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
