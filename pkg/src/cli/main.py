import argparse
import logging
import sys
from pathlib import Path

from pydantic import ValidationError

from cli.compare import compare, load_results, render, write_comparison
from cli.config import load_config, output_dir
from cli.pipeline import run_experiment
from cli.plotdata import parse_grid, write_plotdata
from core.errors import StageError, SubspaceInferenceError
from core.log import configure_logging
from core.settings import settings
from schema.models import LogLevel, Stage

logger = logging.getLogger(__name__)

EXIT_FAILURE = 1
EXIT_BAD_CONFIG = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="subspace-inference",
        description="Active-subspace Bayesian inference for multilayer perceptrons.",
    )
    parser.add_argument("--out", type=Path, help="run directory (overrides the config file)")
    parser.add_argument(
        "--from",
        dest="start",
        type=Stage,
        choices=list(Stage),
        default=Stage.PRETRAIN,
        help="first stage to run; earlier stages are read from the run directory",
    )
    parser.add_argument("--threads", type=int, default=settings.THREADS, help="trials run concurrently")
    parser.add_argument("--log-level", type=LogLevel, choices=list(LogLevel), default=None)
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="run every trial of an experiment")
    run.add_argument("config", type=Path)

    plot = commands.add_parser("plotdata", help="emit bands.csv and curves.csv for a completed run")
    plot.add_argument("config", type=Path)
    plot.add_argument("--grid", default="0:1:0.005", help="a:b:step")
    plot.add_argument("--trial", type=int, default=0)

    comp = commands.add_parser("compare", help="compare results.json files")
    comp.add_argument("results", type=Path, nargs="+")
    return parser


def cmd_run(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    run_experiment(config, output_dir(config, args.out), start=args.start, threads=args.threads)
    return 0


def cmd_plotdata(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    write_plotdata(output_dir(config, args.out), parse_grid(args.grid), trial=args.trial)
    return 0


def cmd_compare(args: argparse.Namespace) -> int:
    table = compare(load_results(args.results))
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        write_comparison(table, args.out / "compare.csv")
    print(render(table))
    return 0


COMMANDS = {"run": cmd_run, "plotdata": cmd_plotdata, "compare": cmd_compare}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    try:
        return COMMANDS[args.command](args)
    except ValidationError as e:
        logger.error(f"invalid configuration: {e}")
        return EXIT_BAD_CONFIG
    except StageError as e:
        logger.error(str(e))
        return EXIT_FAILURE
    except SubspaceInferenceError as e:
        logger.error(f"{args.command}: {e}")
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
