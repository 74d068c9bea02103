"""
Command line entry point.

    acteval run configs/mallows_phi03.json --seeds 20 --workers 4
    acteval sweep configs/mallows_sweep.json
    acteval kemeny-check configs/kemeny_check.json
    acteval validate-data scores.csv
    acteval report results/mallows_phi03 --log-log
    acteval task-variation configs/mallows_phi03.json
"""

import argparse
import logging
import sys
from pathlib import Path

from ..base import APP_NAME, ConfigError, ContractViolation, DataError
from ..datagen import dataset_problems, read_dataset
from .config import ExperimentConfig, env_log_level, load_config
from .engine import ExperimentEngine, KemenyCheckEngine, task_variation_table
from .report import (
    emit_kemeny_reports,
    emit_plots,
    emit_reports,
    emit_task_variation,
    read_report,
    write_manifest,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_CONTRACT = 3

logger = logging.getLogger(APP_NAME)


def setup_logging(level: str) -> None:
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format="%(asctime)s\t%(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
        force=True,
    )


def _config(args: argparse.Namespace) -> ExperimentConfig:
    """
    Load the configuration and apply command-line overrides.
    """
    config = load_config(args.config)
    if args.seeds is not None:
        config.seeds = args.seeds
    if args.horizon is not None:
        config.horizon = args.horizon
    if args.out is not None:
        config.output_dir = args.out
    if args.workers is not None:
        config.workers = args.workers
    if args.window is not None:
        config.window = args.window
    if args.ratings:
        config.ratings = True
    if args.log_log:
        config.log_log = True
    config.validate()
    return config


def run_config(config: ExperimentConfig, command: str = "run") -> None:
    engine = ExperimentEngine(config)
    outdir = engine.prepare_output()
    try:
        report = engine.run_experiment()
    finally:
        engine.cleanup()
    for path in emit_reports(report, outdir):
        engine.write_log(f"wrote {path}")
    write_manifest(config.to_dict(), outdir, command)


def cmd_run(args: argparse.Namespace) -> int:
    run_config(_config(args))
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    config = _config(args)
    engine = ExperimentEngine(config)
    for name, point in engine.sweep_points():
        engine.write_log(f"sweep point {name}")
        run_config(point, "sweep")
    return EXIT_OK


def cmd_kemeny_check(args: argparse.Namespace) -> int:
    config = _config(args)
    engine = KemenyCheckEngine(config)
    outdir = engine.prepare_output()
    try:
        summary = engine.kemeny_recovery_experiment()
    finally:
        engine.cleanup()
    for path in emit_kemeny_reports(summary, outdir):
        engine.write_log(f"wrote {path}")
    write_manifest(config.to_dict(), outdir, "kemeny-check")
    return EXIT_OK


def cmd_task_variation(args: argparse.Namespace) -> int:
    config = _config(args)
    path = emit_task_variation(task_variation_table(config), config.output_dir)
    logger.info(f"wrote {path}")
    return EXIT_OK


def cmd_validate_data(args: argparse.Namespace) -> int:
    problems = dataset_problems(read_dataset(args.csv))
    if problems:
        for problem in problems:
            logger.error(problem)
        raise DataError(f"{args.csv}: {len(problems)} problem(s)")
    logger.info(f"{args.csv}: ok")
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    report = read_report(args.dir, log_log=args.log_log)
    for path in emit_plots(report, Path(args.dir)):
        logger.info(f"wrote {path}")
    return EXIT_OK


def _experiment_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("config", help="experiment configuration (JSON)")
    parser.add_argument("--seeds", type=int, help="number of seeds")
    parser.add_argument("--horizon", type=int, help="rounds T per run")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--workers", type=int, help="worker processes")
    parser.add_argument("--window", type=int, help="sliding window W for GRE curves")
    parser.add_argument("--ratings", action="store_true", help="also write ratings.csv")
    parser.add_argument("--log-log", action="store_true", help="log scale on both plot axes")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="acteval", description="Active evaluation of multi-task agents")
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR")
    commands = parser.add_subparsers(dest="command", required=True)

    for name, func, help_text in (
        ("run", cmd_run, "run an experiment"),
        ("sweep", cmd_sweep, "run an experiment for every sweep point"),
        ("kemeny-check", cmd_kemeny_check, "Kemeny ground-truth recovery"),
        ("task-variation", cmd_task_variation, "distance histogram between ground truth and task rankings"),
    ):
        sub = commands.add_parser(name, help=help_text)
        _experiment_flags(sub)
        sub.set_defaults(func=func)

    sub = commands.add_parser("validate-data", help="lint a dataset CSV")
    sub.add_argument("csv")
    sub.set_defaults(func=cmd_validate_data)

    sub = commands.add_parser("report", help="rebuild plots from the CSVs of a run")
    sub.add_argument("dir")
    sub.add_argument("--log-log", action="store_true", help="log scale on both plot axes")
    sub.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level or env_log_level())

    try:
        return args.func(args)
    except ConfigError as e:
        logger.error(f"configuration error: {e}")
        return EXIT_CONFIG
    except DataError as e:
        logger.error(f"data error: {e}")
        return EXIT_DATA
    except OSError as e:
        logger.error(f"I/O error: {e}")
        return EXIT_DATA
    except ContractViolation as e:
        logger.error(f"contract violation: {e}")
        return EXIT_CONTRACT


if __name__ == "__main__":
    sys.exit(main())
