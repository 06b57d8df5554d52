"""Experiment harness for wrapper feature selection.

Runs one method over a list of seeds, retrains the final tree on the full
training split with the selected features, scores it on the test split and
writes one JSON report per run plus an append-only runs.jsonl index.
"""

import logging
import time
from pathlib import Path
from typing import Any, Literal

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field
from scipy.stats import ttest_rel

from services.classifier.factory import create_classifier
from services.classifier.tree import TreeParams
from services.data.schema import BitMask, Dataset, RawDataset, mask_to_str
from services.data.service import load_dataset, preprocess, split
from services.optimizers import chc
from services.optimizers.bpso import PsoConfig, pso_run
from services.optimizers.chc import ChcConfig
from services.optimizers.report import (
    CostLedger,
    FinalResult,
    RunClock,
    RunReport,
    make_record,
)
from services.shared.config import Settings, get_settings
from services.shared.errors import ConfigError
from services.surrogate.evaluator import FeatureSubsetEvaluator
from services.surrogate.service import QxConfig, qx_run

logger = logging.getLogger(__name__)

Method = Literal["baseline", "chc", "pso", "chc_qx", "pso_qx"]
METHODS: tuple[str, ...] = ("baseline", "chc", "pso", "chc_qx", "pso_qx")
QX_COUNTERPART = {"chc": "chc_qx", "pso": "pso_qx"}


def entropy_seed() -> int:
    """Fresh 32-bit seed from OS entropy."""
    return int(np.random.SeedSequence().generate_state(1)[0])


class ExperimentConfig(BaseModel):
    """One experiment: a dataset, a method and its engine settings, a list of seeds.

    The chc and pso sections configure both the plain engines and the
    feature stage of the QX methods. Seeds default to one entropy-drawn seed,
    which ends up in the report.
    """

    model_config = ConfigDict(extra="forbid")

    data: Path | None = None
    label: str | int = -1
    delimiter: str | None = None
    method: Method = "chc_qx"
    seeds: list[int] = Field(default_factory=lambda: [entropy_seed()], min_length=1)
    budget_s: float | None = Field(default=None, gt=0.0)
    matched_budget: bool = False
    output_dir: Path | None = None
    classifier: str = "tree"
    tree: TreeParams = Field(default_factory=TreeParams)
    chc: ChcConfig = Field(default_factory=ChcConfig)
    pso: PsoConfig = Field(default_factory=PsoConfig)
    qx: QxConfig = Field(default_factory=QxConfig)

    @classmethod
    def from_file(cls, path: Path) -> "ExperimentConfig":
        """Load a JSON config file.

        Raises:
            ConfigError: File missing or unreadable
            pydantic.ValidationError: Unknown keys or invalid values
        """
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigError(f"Cannot read config file {path}: {e}") from e
        return cls.model_validate_json(text)


def _run_search(
    method: str,
    cfg: ExperimentConfig,
    evaluator: FeatureSubsetEvaluator,
    seed: int,
    budget_s: float | None,
) -> tuple[BitMask, RunReport]:
    k = evaluator.k
    chc_cfg = cfg.chc.model_copy(update={"seed": seed})
    pso_cfg = cfg.pso.model_copy(update={"seed": seed})

    if method == "baseline":
        clock = RunClock()
        mask = evaluator.all_features()
        fitness = evaluator.evaluate_original(mask)
        report = RunReport(method="baseline", seed=seed)
        report.records.append(make_record(0, fitness, mask, 1, evaluator.ledger, clock))
        report.best_mask, report.best_fitness = mask_to_str(mask), fitness
        return mask, report
    if method == "chc":
        return chc.run(
            chc_cfg, k, evaluator.evaluate_original, ledger=evaluator.ledger, budget_s=budget_s
        )
    if method == "pso":
        return pso_run(
            pso_cfg, k, evaluator.evaluate_original, ledger=evaluator.ledger, budget_s=budget_s
        )

    engine = "chc" if method == "chc_qx" else "pso"
    qx_cfg = cfg.qx.model_copy(update={"engine": engine, "chc": chc_cfg, "pso": pso_cfg})
    return qx_run(evaluator, qx_cfg, budget_s=budget_s)


def run_single(
    cfg: ExperimentConfig,
    source: RawDataset | Dataset,
    method: str,
    seed: int,
    budget_s: float | None = None,
    settings: Settings | None = None,
) -> RunReport:
    """Run one method with one seed and score the final model.

    The seed drives the row shuffle, the split and the engines, so methods
    run with the same seed see the same split.
    """
    settings = settings or get_settings()
    started = time.perf_counter()

    splits = split(preprocess(source, seed), seed)
    evaluator = FeatureSubsetEvaluator(
        splits,
        classifier=create_classifier(cfg.classifier, cfg.tree),
        ledger=CostLedger(),
        cache=settings.cache_evaluations,
    )
    mask, report = _run_search(method, cfg, evaluator, seed, budget_s)

    test_accuracy, validation_accuracy = evaluator.score_on_test(mask)
    names = evaluator.selected_names(mask)
    report.method = method
    report.seed = seed
    report.final = FinalResult(
        test_accuracy=test_accuracy,
        validation_accuracy=validation_accuracy,
        selected_features=names,
        n_selected=len(names),
        total_time=round(time.perf_counter() - started, 6),
    )
    report.metadata.update(
        {
            "dataset": str(cfg.data) if cfg.data else None,
            "n_train": splits.train.n,
            "n_validation": splits.validation.n,
            "n_test": splits.test.n,
            "k": splits.k,
            "budget_s": budget_s,
            "ledger": evaluator.ledger.snapshot(),
            "tool": f"{settings.service_name} {settings.service_version}",
        }
    )
    logger.info(
        f"{method} seed={seed}: test accuracy {test_accuracy:.4f} with "
        f"{len(names)}/{splits.k} features in {report.final.total_time:.2f}s"
    )
    return report


def write_report(report: RunReport, output_dir: Path) -> Path:
    """Write <method>_seed<seed>.json and append one line to runs.jsonl."""
    output_dir.mkdir(parents=True, exist_ok=True)
    path = output_dir / f"{report.method}_seed{report.seed}.json"
    path.write_text(report.model_dump_json(indent=2), encoding="utf-8")
    with open(output_dir / "runs.jsonl", "a", encoding="utf-8") as f:
        f.write(report.model_dump_json() + "\n")
    return path


def load_reports(output_dir: Path) -> list[RunReport]:
    """Read every per-run JSON report in a directory."""
    return [
        RunReport.model_validate_json(p.read_text(encoding="utf-8"))
        for p in sorted(output_dir.glob("*_seed*.json"))
    ]


def _load_source(cfg: ExperimentConfig, settings: Settings) -> RawDataset:
    if cfg.data is None:
        raise ConfigError("No dataset given (set 'data' or pass --data)")
    return load_dataset(cfg.data, cfg.label, cfg.delimiter or settings.csv_delimiter)


def run_experiment(
    cfg: ExperimentConfig,
    source: RawDataset | Dataset | None = None,
    settings: Settings | None = None,
    write: bool = True,
) -> list[RunReport]:
    """Run cfg.method for every seed.

    With matched_budget and a plain engine method, each seed first runs the
    QX counterpart to convergence and then caps the plain run at the QX run's
    total wall time (sampling stage included). Both reports are returned.

    Args:
        cfg: Experiment description
        source: Dataset to use instead of loading cfg.data
        settings: Process settings (default output directory, delimiter, caching)
        write: Write reports to the output directory

    Raises:
        ConfigError: No dataset, or matched_budget with a method that has no counterpart
        DataError: Dataset could not be loaded or split
    """
    settings = settings or get_settings()
    if source is None:
        source = _load_source(cfg, settings)
    if cfg.matched_budget and cfg.method not in QX_COUNTERPART:
        raise ConfigError(f"matched_budget needs method chc or pso, got {cfg.method}")
    output_dir = cfg.output_dir or settings.output_dir

    reports: list[RunReport] = []
    for seed in cfg.seeds:
        budget = cfg.budget_s
        if cfg.matched_budget:
            reference = run_single(cfg, source, QX_COUNTERPART[cfg.method], seed, None, settings)
            assert reference.final is not None
            budget = reference.final.total_time
            reports.append(reference)
            if write:
                write_report(reference, output_dir)

        report = run_single(cfg, source, cfg.method, seed, budget, settings)
        if cfg.matched_budget:
            report.metadata["matched_to"] = QX_COUNTERPART[cfg.method]
        reports.append(report)
        if write:
            path = write_report(report, output_dir)
            logger.info(f"Report written to {path}")
    return reports


class MethodSummary(BaseModel):
    """Median and spread of one method's runs."""

    method: str
    runs: int
    median_test_accuracy: float
    std_test_accuracy: float
    median_selected: float
    median_total_time: float
    median_original_evals: float
    median_surrogate_evals: float


def reports_frame(reports: list[RunReport]) -> pd.DataFrame:
    """One row per finished run: method, seed, accuracy, size, time, counters."""
    rows = []
    for r in reports:
        if r.final is None:
            continue
        ledger = r.metadata.get("ledger", {})
        rows.append(
            {
                "method": r.method,
                "seed": r.seed,
                "test_accuracy": r.final.test_accuracy,
                "n_selected": r.final.n_selected,
                "total_time": r.final.total_time,
                "original_evals": ledger.get("original_evals", 0),
                "surrogate_evals": ledger.get("surrogate_evals", 0),
            }
        )
    return pd.DataFrame(
        rows,
        columns=[
            "method",
            "seed",
            "test_accuracy",
            "n_selected",
            "total_time",
            "original_evals",
            "surrogate_evals",
        ],
    )


def summarize_reports(reports: list[RunReport]) -> list[MethodSummary]:
    """Per-method median (and test-accuracy std) over seeds."""
    frame = reports_frame(reports)
    summaries = []
    for method, group in frame.groupby("method", sort=True):
        summaries.append(
            MethodSummary(
                method=str(method),
                runs=len(group),
                median_test_accuracy=float(group["test_accuracy"].median()),
                std_test_accuracy=float(group["test_accuracy"].std(ddof=0)),
                median_selected=float(group["n_selected"].median()),
                median_total_time=float(group["total_time"].median()),
                median_original_evals=float(group["original_evals"].median()),
                median_surrogate_evals=float(group["surrogate_evals"].median()),
            )
        )
    return summaries


class MethodComparison(BaseModel):
    """Paired comparison of two methods on shared seeds."""

    method_a: str
    method_b: str
    pairs: int
    median_difference: float
    t_statistic: float | None = None
    p_value: float | None = None


def compare_methods(reports: list[RunReport], method_a: str, method_b: str) -> MethodComparison:
    """Paired t-test of test accuracy (a minus b) over seeds both methods ran.

    The statistic is None with fewer than two pairs or identical differences.

    Raises:
        ValueError: The methods share no seed
    """
    frame = reports_frame(reports)
    a = frame[frame["method"] == method_a].set_index("seed")["test_accuracy"]
    b = frame[frame["method"] == method_b].set_index("seed")["test_accuracy"]
    seeds = a.index.intersection(b.index)
    if len(seeds) == 0:
        raise ValueError(f"No common seeds between {method_a} and {method_b}")
    diff = a.loc[seeds] - b.loc[seeds]

    t_stat: float | None = None
    p_value: float | None = None
    if len(seeds) >= 2 and diff.nunique() > 1:
        result = ttest_rel(a.loc[seeds], b.loc[seeds])
        t_stat, p_value = float(result.statistic), float(result.pvalue)
    return MethodComparison(
        method_a=method_a,
        method_b=method_b,
        pairs=len(seeds),
        median_difference=float(diff.median()),
        t_statistic=t_stat,
        p_value=p_value,
    )


SweepParameter = Literal["population", "f"]


def population_for(percent: float, k: int) -> int:
    """Even population size closest to percent of k, at least 2."""
    size = max(2, round(percent / 100.0 * k))
    return size + size % 2


def run_sweep(
    cfg: ExperimentConfig,
    parameter: SweepParameter,
    values: list[float],
    source: RawDataset | Dataset | None = None,
    settings: Settings | None = None,
) -> dict[float, list[MethodSummary]]:
    """Repeat run_experiment for each value of one parameter.

    population: size as a percentage of k, applied to CHC e and PSO particles.
    f: evolution-control frequency of the QX methods.

    Reports go to <output_dir>/<parameter>_<value>/.
    """
    settings = settings or get_settings()
    if source is None:
        source = _load_source(cfg, settings)
    k = source.k
    base_dir = cfg.output_dir or settings.output_dir

    results: dict[float, list[MethodSummary]] = {}
    for value in values:
        if parameter == "population":
            size = population_for(value, k)
            update: dict[str, Any] = {
                "chc": cfg.chc.model_copy(update={"e": size}),
                "pso": cfg.pso.model_copy(update={"particles": size}),
            }
        elif parameter == "f":
            update = {"qx": cfg.qx.model_copy(update={"f": int(value)})}
        else:
            raise ConfigError(f"Unknown sweep parameter: {parameter}")
        update["output_dir"] = base_dir / f"{parameter}_{value:g}"
        swept = cfg.model_copy(update=update)
        results[value] = summarize_reports(run_experiment(swept, source, settings))
        logger.info(f"Sweep {parameter}={value:g} done")
    return results
