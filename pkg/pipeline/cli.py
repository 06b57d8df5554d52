"""Command-line entry point (fsbench).

Subcommands:
    run               Run a method over seeds and write reports
    curve-learning    Test accuracy against training sample size
    curve-usefulness  Rank agreement against training sample size
    cost-model        Analytic cost of CHC vs CHC_QX
    summarize         Per-method medians of a report directory
    sweep             Population-size or control-frequency sensitivity

Exit codes: 0 success, 1 configuration error, 2 data error, 3 runtime failure.

Usage:
    fsbench run --data data/german.csv --label class --method chc_qx --seeds 1,2,3
    fsbench cost-model --r 13 --e 50 --q 10 --f 10
"""

import argparse
import json
import logging
import sys
from collections.abc import Sequence
from pathlib import Path

from pydantic import ValidationError

from pipeline.bench.cost import cost_model, crossover_generation
from pipeline.bench.curves import (
    geometric_schedule,
    learning_curve,
    usefulness_curve,
    write_curve,
)
from pipeline.eval.eval import (
    METHODS,
    ExperimentConfig,
    compare_methods,
    entropy_seed,
    load_reports,
    run_experiment,
    run_sweep,
    summarize_reports,
)
from services.data.schema import SplitSet
from services.data.service import load_dataset, preprocess, split
from services.shared.config import Settings, get_settings
from services.shared.errors import ConfigError, DataError
from services.shared.metrics import export_metrics

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_RUNTIME = 3


def parse_seeds(text: str) -> list[int]:
    """Parse "1,2,3" into [1, 2, 3]."""
    try:
        seeds = [int(s) for s in text.split(",") if s.strip()]
    except ValueError as e:
        raise ConfigError(f"Seeds must be comma-separated integers, got {text!r}") from e
    if not seeds:
        raise ConfigError("At least one seed is required")
    return seeds


def parse_values(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise ConfigError(f"Values must be comma-separated numbers, got {text!r}") from e


def _label(text: str) -> str | int:
    """Column name, or a 0-based index when the argument is an integer."""
    try:
        return int(text)
    except ValueError:
        return text


def _add_data_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", type=Path, help="Delimiter-separated dataset with a header row")
    p.add_argument(
        "--label", type=_label, default=None, help="Class column name or index (default: last)"
    )
    p.add_argument("--delimiter", default=None, help="Field delimiter (default from settings)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fsbench", description="Surrogate-assisted wrapper feature selection benchmark"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Run a method over seeds")
    _add_data_args(run)
    run.add_argument("--method", choices=METHODS, default=None)
    run.add_argument("--seeds", default=None, help="Comma-separated seeds (default: entropy)")
    run.add_argument("--config", type=Path, default=None, help="JSON experiment config")
    run.add_argument("--out", type=Path, default=None, help="Report directory")
    run.add_argument("--budget", type=float, default=None, help="Wall-clock cap in seconds")
    run.add_argument(
        "--matched-budget",
        action="store_true",
        help="Cap chc/pso at the wall time of their QX counterpart",
    )

    for name, help_text in (
        ("curve-learning", "Test accuracy vs sample size"),
        ("curve-usefulness", "Spearman rho vs sample size"),
    ):
        curve = sub.add_parser(name, help=help_text)
        _add_data_args(curve)
        curve.add_argument("--n0", type=int, default=32)
        curve.add_argument("--ratio", type=float, default=2.0)
        curve.add_argument("--n-max", type=int, default=None, help="Default: n_train")
        curve.add_argument("--seed", type=int, default=None)
        curve.add_argument("--out", type=Path, default=None, help="CSV file")
        if name == "curve-usefulness":
            curve.add_argument("--q", type=int, default=20)

    cost = sub.add_parser("cost-model", help="Analytic CHC vs CHC_QX cost")
    cost.add_argument("--r", type=int, required=True, help="Generations")
    cost.add_argument("--e", type=int, default=50, help="Population size")
    cost.add_argument("--q", type=int, default=10, help="Probe subsets")
    cost.add_argument("--f", type=int, default=10, help="Evolution-control frequency")
    cost.add_argument("--n", type=int, default=1)
    cost.add_argument("--k", type=int, default=1)

    summarize = sub.add_parser("summarize", help="Summaries of a report directory")
    summarize.add_argument("--reports", type=Path, required=True)
    summarize.add_argument(
        "--compare", nargs=2, metavar=("A", "B"), default=None, help="Paired test of A vs B"
    )

    sweep = sub.add_parser("sweep", help="Sensitivity sweep")
    _add_data_args(sweep)
    sweep.add_argument("--parameter", choices=("population", "f"), required=True)
    sweep.add_argument(
        "--values", default=None, help="Default: 50,100,200,400 (population) or 5,10,20,40 (f)"
    )
    sweep.add_argument("--method", choices=METHODS, default=None)
    sweep.add_argument("--seeds", default=None)
    sweep.add_argument("--config", type=Path, default=None)
    sweep.add_argument("--out", type=Path, default=None)
    return parser


def _experiment_config(args: argparse.Namespace) -> ExperimentConfig:
    """Config file values overridden by explicit flags."""
    cfg = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig()
    update: dict[str, object] = {}
    if args.data is not None:
        update["data"] = args.data
    if args.label is not None:
        update["label"] = args.label
    if args.delimiter is not None:
        update["delimiter"] = args.delimiter
    if args.method is not None:
        update["method"] = args.method
    if args.seeds is not None:
        update["seeds"] = parse_seeds(args.seeds)
    if args.out is not None:
        update["output_dir"] = args.out
    if getattr(args, "budget", None) is not None:
        update["budget_s"] = args.budget
    if getattr(args, "matched_budget", False):
        update["matched_budget"] = True
    return ExperimentConfig.model_validate({**cfg.model_dump(), **update})


def cmd_run(args: argparse.Namespace, settings: Settings) -> int:
    cfg = _experiment_config(args)
    logger.info(f"Running {cfg.method} on seeds {cfg.seeds}")
    reports = run_experiment(cfg, settings=settings)
    for summary in summarize_reports(reports):
        print(summary.model_dump_json())
    return EXIT_OK


def _curve_splits(args: argparse.Namespace, settings: Settings, seed: int) -> SplitSet:
    if args.data is None:
        raise ConfigError("--data is required")
    label = args.label if args.label is not None else -1
    raw = load_dataset(args.data, label, args.delimiter or settings.csv_delimiter)
    return split(preprocess(raw, seed), seed)


def cmd_curve(args: argparse.Namespace, settings: Settings) -> int:
    seed = args.seed if args.seed is not None else entropy_seed()
    splits = _curve_splits(args, settings, seed)
    n_max = args.n_max if args.n_max is not None else splits.train.n
    try:
        schedule = geometric_schedule(args.n0, args.ratio, n_max)
    except ValueError as e:
        raise ConfigError(str(e)) from e

    if args.command == "curve-learning":
        points = learning_curve(splits, schedule, seed)
        default_name = f"learning_curve_seed{seed}.csv"
    else:
        points = usefulness_curve(splits, schedule, args.q, seed)
        default_name = f"usefulness_curve_seed{seed}.csv"

    out = args.out or settings.output_dir / default_name
    write_curve(points, out)
    for point in points:
        print(f"{point.sample_size},{point.metric:.6f}")
    return EXIT_OK


def cmd_cost_model(args: argparse.Namespace, settings: Settings) -> int:
    try:
        estimate = cost_model(args.r, args.e, args.q, args.f, args.n, args.k)
    except ValueError as e:
        raise ConfigError(str(e)) from e
    result = estimate.model_dump()
    result["qx_cheaper"] = estimate.qx_cheaper
    result["crossover_generation"] = crossover_generation(args.e, args.q, args.f)
    print(json.dumps(result, indent=2))
    return EXIT_OK


def cmd_summarize(args: argparse.Namespace, settings: Settings) -> int:
    if not args.reports.is_dir():
        raise DataError(f"Report directory not found: {args.reports}")
    reports = load_reports(args.reports)
    if not reports:
        raise DataError(f"No reports in {args.reports}")
    summaries = summarize_reports(reports)
    (args.reports / "summary.json").write_text(
        json.dumps([s.model_dump() for s in summaries], indent=2), encoding="utf-8"
    )
    for summary in summaries:
        print(summary.model_dump_json())
    if args.compare:
        try:
            comparison = compare_methods(reports, *args.compare)
        except ValueError as e:
            raise DataError(str(e)) from e
        print(comparison.model_dump_json())
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace, settings: Settings) -> int:
    cfg = _experiment_config(args)
    defaults = "50,100,200,400" if args.parameter == "population" else "5,10,20,40"
    values = parse_values(args.values or defaults)
    results = run_sweep(cfg, args.parameter, values, settings=settings)
    for value, summaries in results.items():
        for summary in summaries:
            print(json.dumps({args.parameter: value, **summary.model_dump()}))
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "curve-learning": cmd_curve,
    "curve-usefulness": cmd_curve,
    "cost-model": cmd_cost_model,
    "summarize": cmd_summarize,
    "sweep": cmd_sweep,
}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    settings = get_settings()
    logging.basicConfig(level=settings.log_level, format="%(levelname)s: %(message)s")

    try:
        code = COMMANDS[args.command](args, settings)
    except (ConfigError, ValidationError) as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG
    except DataError as e:
        logger.error(f"Data error: {e}")
        return EXIT_DATA
    except Exception as e:
        logger.exception(f"Run failed: {e}")
        return EXIT_RUNTIME

    if settings.metrics_file is not None:
        export_metrics(settings.metrics_file)
    return code


if __name__ == "__main__":
    sys.exit(main())
