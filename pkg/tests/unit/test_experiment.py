"""Unit tests for the experiment harness.

Tests cover:
- Config loading and validation
- Per-method runs, final scoring and report files
- Matched-budget protocol and determinism
- Summaries, paired comparisons and parameter sweeps
"""

import json
from pathlib import Path

import numpy as np
import pytest
from pydantic import ValidationError

from pipeline.bench.synthetic import graded_dataset, write_dataset_csv
from pipeline.eval.eval import (
    ExperimentConfig,
    compare_methods,
    load_reports,
    population_for,
    reports_frame,
    run_experiment,
    run_single,
    run_sweep,
    summarize_reports,
    write_report,
)
from services.data.schema import Dataset
from services.optimizers.bpso import PsoConfig
from services.optimizers.chc import ChcConfig
from services.optimizers.report import RunReport
from services.shared.config import Settings
from services.shared.errors import ConfigError
from services.surrogate.service import QxConfig


@pytest.fixture
def source() -> Dataset:
    return graded_dataset(n_base=50, duplicates=3, seed=2)


@pytest.fixture
def settings(tmp_path: Path) -> Settings:
    return Settings(_env_file=None, output_dir=tmp_path / "results")


def small_config(method: str, seeds: list[int], **overrides: object) -> ExperimentConfig:
    """Fast engine settings for harness tests."""
    return ExperimentConfig.model_validate(
        {
            "method": method,
            "seeds": seeds,
            "chc": ChcConfig(e=6, t_max=5),
            "pso": PsoConfig(particles=6, t_max=5),
            "qx": QxConfig(q=6, f=2, t_max=6, is_tmax=3),
            **overrides,
        }
    )


class TestExperimentConfig:
    """Tests for ExperimentConfig."""

    def test_defaults(self) -> None:
        cfg = ExperimentConfig()

        assert cfg.method == "chc_qx"
        assert len(cfg.seeds) == 1
        assert cfg.label == -1
        assert cfg.classifier == "tree"

    def test_rejects_unknown_method(self) -> None:
        with pytest.raises(ValidationError):
            ExperimentConfig.model_validate({"method": "ga"})

    def test_rejects_empty_seed_list(self) -> None:
        with pytest.raises(ValidationError):
            ExperimentConfig(seeds=[])

    def test_from_file(self, tmp_path: Path) -> None:
        path = tmp_path / "experiment.json"
        path.write_text(json.dumps({"method": "pso", "seeds": [4, 5], "pso": {"particles": 10}}))

        cfg = ExperimentConfig.from_file(path)

        assert cfg.method == "pso"
        assert cfg.seeds == [4, 5]
        assert cfg.pso.particles == 10

    def test_from_file_rejects_unknown_keys(self, tmp_path: Path) -> None:
        path = tmp_path / "experiment.json"
        path.write_text(json.dumps({"chc": {"mutation": 0.1}}))

        with pytest.raises(ValidationError):
            ExperimentConfig.from_file(path)

    def test_from_missing_file(self, tmp_path: Path) -> None:
        with pytest.raises(ConfigError, match="Cannot read config file"):
            ExperimentConfig.from_file(tmp_path / "missing.json")


class TestRunSingle:
    """Tests for run_single."""

    def test_baseline_uses_every_feature(self, source: Dataset, settings: Settings) -> None:
        report = run_single(small_config("baseline", [1]), source, "baseline", 1, settings=settings)

        assert report.final is not None
        assert report.final.n_selected == source.k
        assert report.best_mask == "1" * source.k
        assert len(report.records) == 1
        assert report.metadata["ledger"]["original_evals"] == 1

    @pytest.mark.parametrize("method", ["chc", "pso", "chc_qx", "pso_qx"])
    def test_every_method_produces_final_result(
        self, method: str, source: Dataset, settings: Settings
    ) -> None:
        report = run_single(small_config(method, [3]), source, method, 3, settings=settings)

        assert report.method == method
        assert report.seed == 3
        assert report.final is not None
        assert 0.0 <= report.final.test_accuracy <= 1.0
        assert report.final.n_selected == len(report.final.selected_features) >= 1
        sizes = [report.metadata[key] for key in ("n_train", "n_validation", "n_test")]
        assert sum(sizes) == source.n

    def test_qx_run_counts_surrogate_trainings(self, source: Dataset, settings: Settings) -> None:
        report = run_single(small_config("chc_qx", [2]), source, "chc_qx", 2, settings=settings)

        assert report.metadata["ledger"]["surrogate_evals"] > 0
        assert report.metadata["budget_includes_sampling"] is True

    def test_budget_bounds_total_time(self, source: Dataset, settings: Settings) -> None:
        """A budgeted run should stop within a generation of its cap."""
        cfg = small_config("chc_qx", [5], qx=QxConfig(q=6, f=2, t_max=500, no_change_limit=500))

        report = run_single(cfg, source, "chc_qx", 5, budget_s=0.2, settings=settings)

        assert report.final is not None
        assert report.final.total_time <= 0.2 + 2.0
        assert report.metadata["budget_s"] == 0.2


class TestRunExperiment:
    """Tests for run_experiment and report files."""

    def test_one_report_per_seed(self, source: Dataset, settings: Settings) -> None:
        reports = run_experiment(small_config("chc", [1, 2, 3]), source, settings)

        assert [r.seed for r in reports] == [1, 2, 3]
        out = settings.output_dir
        assert sorted(p.name for p in out.glob("*.json")) == [
            "chc_seed1.json",
            "chc_seed2.json",
            "chc_seed3.json",
        ]
        assert len((out / "runs.jsonl").read_text().splitlines()) == 3
        assert [r.seed for r in load_reports(out)] == [1, 2, 3]

    def test_write_disabled(self, source: Dataset, settings: Settings) -> None:
        run_experiment(small_config("baseline", [1]), source, settings, write=False)

        assert not settings.output_dir.exists()

    def test_runs_log_is_append_only(self, tmp_path: Path) -> None:
        report = RunReport(method="chc", seed=1)
        write_report(report, tmp_path)
        write_report(report, tmp_path)

        assert len((tmp_path / "runs.jsonl").read_text().splitlines()) == 2

    def test_repeat_reproduces_masks_and_counters(
        self, source: Dataset, settings: Settings
    ) -> None:
        """Same config and seed should reproduce masks, trajectories and counters."""
        cfg = small_config("chc_qx", [9])

        a = run_experiment(cfg, source, settings, write=False)[0]
        b = run_experiment(cfg, source, settings, write=False)[0]

        assert a.best_mask == b.best_mask
        assert a.trajectory() == b.trajectory()
        assert a.metadata["ledger"]["original_evals"] == b.metadata["ledger"]["original_evals"]
        assert a.metadata["ledger"]["surrogate_evals"] == b.metadata["ledger"]["surrogate_evals"]

    def test_matched_budget_runs_qx_first(self, source: Dataset, settings: Settings) -> None:
        cfg = small_config("chc", [4], matched_budget=True)

        reference, plain = run_experiment(cfg, source, settings, write=False)

        assert reference.method == "chc_qx"
        assert plain.method == "chc"
        assert reference.final is not None
        assert plain.metadata["budget_s"] == reference.final.total_time
        assert plain.metadata["matched_to"] == "chc_qx"

    def test_matched_budget_needs_plain_engine(self, source: Dataset, settings: Settings) -> None:
        with pytest.raises(ConfigError, match="matched_budget"):
            run_experiment(small_config("baseline", [1], matched_budget=True), source, settings)

    def test_no_dataset(self, settings: Settings) -> None:
        with pytest.raises(ConfigError, match="No dataset"):
            run_experiment(small_config("baseline", [1]), settings=settings)

    def test_loads_csv_from_config(self, tmp_path: Path, settings: Settings) -> None:
        data = tmp_path / "graded.csv"
        write_dataset_csv(graded_dataset(n_base=30, duplicates=2, seed=0), data)
        cfg = small_config("baseline", [1], data=data, label="class")

        report = run_experiment(cfg, settings=settings)[0]

        assert report.metadata["dataset"] == str(data)
        assert report.metadata["k"] == 6


class TestSummaries:
    """Tests for summaries and comparisons."""

    @pytest.fixture
    def reports(self, source: Dataset, settings: Settings) -> list[RunReport]:
        baseline = run_experiment(small_config("baseline", [1, 2, 3]), source, settings, False)
        chc_reports = run_experiment(small_config("chc", [1, 2, 3]), source, settings, False)
        return baseline + chc_reports

    def test_frame_has_one_row_per_run(self, reports: list[RunReport]) -> None:
        frame = reports_frame(reports)

        assert len(frame) == 6
        assert set(frame["method"]) == {"baseline", "chc"}

    def test_summary_medians(self, reports: list[RunReport]) -> None:
        summaries = {s.method: s for s in summarize_reports(reports)}

        accuracies = [r.final.test_accuracy for r in reports if r.method == "chc" and r.final]
        assert summaries["chc"].runs == 3
        assert summaries["chc"].median_test_accuracy == pytest.approx(np.median(accuracies))
        assert summaries["baseline"].median_original_evals == 1

    def test_compare_pairs_by_seed(self, reports: list[RunReport]) -> None:
        comparison = compare_methods(reports, "chc", "baseline")

        assert comparison.pairs == 3
        assert comparison.method_a == "chc"

    def test_compare_identical_runs_has_no_statistic(self, reports: list[RunReport]) -> None:
        comparison = compare_methods(reports, "baseline", "baseline")

        assert comparison.median_difference == 0.0
        assert comparison.t_statistic is None

    def test_compare_without_common_seeds(self, reports: list[RunReport]) -> None:
        with pytest.raises(ValueError, match="No common seeds"):
            compare_methods(reports, "chc", "pso")


class TestSweep:
    """Tests for parameter sweeps."""

    @pytest.mark.parametrize(("percent", "k", "size"), [(10, 24, 2), (50, 24, 12), (30, 10, 4)])
    def test_population_for(self, percent: float, k: int, size: int) -> None:
        assert population_for(percent, k) == size

    def test_sweep_f(self, source: Dataset, settings: Settings) -> None:
        results = run_sweep(small_config("chc_qx", [1]), "f", [2, 3], source, settings)

        assert set(results) == {2, 3}
        assert (settings.output_dir / "f_2" / "chc_qx_seed1.json").exists()
        assert (settings.output_dir / "f_3" / "chc_qx_seed1.json").exists()
        assert load_reports(settings.output_dir / "f_3")[0].metadata["f"] == 3

    def test_sweep_population(self, source: Dataset, settings: Settings) -> None:
        results = run_sweep(small_config("chc", [1]), "population", [50], source, settings)

        assert results[50][0].runs == 1
        report = load_reports(settings.output_dir / "population_50")[0]
        assert report.method == "chc"
