"""Unit tests for the fsbench command line."""

import json
from pathlib import Path

import pytest

from pipeline import cli
from pipeline.bench.synthetic import graded_dataset, write_dataset_csv
from services.shared.errors import ConfigError


@pytest.fixture
def workdir(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> Path:
    """Isolated working directory with report output under it."""
    monkeypatch.chdir(tmp_path)
    monkeypatch.setenv("FSQX_OUTPUT_DIR", str(tmp_path / "results"))
    return tmp_path


@pytest.fixture
def csv_path(workdir: Path) -> Path:
    path = workdir / "graded.csv"
    write_dataset_csv(graded_dataset(n_base=40, duplicates=2, seed=1), path)
    return path


@pytest.fixture
def config_path(workdir: Path) -> Path:
    """Small engines so CLI runs finish quickly."""
    path = workdir / "experiment.json"
    path.write_text(
        json.dumps(
            {
                "chc": {"e": 6, "t_max": 4},
                "pso": {"particles": 6, "t_max": 4},
                "qx": {"q": 6, "f": 2, "t_max": 4, "is_tmax": 2},
            }
        )
    )
    return path


class TestParsing:
    """Tests for argument helpers."""

    def test_parse_seeds(self) -> None:
        assert cli.parse_seeds("1, 2,3") == [1, 2, 3]

    @pytest.mark.parametrize("text", ["", "a,b", "1.5"])
    def test_parse_seeds_rejects(self, text: str) -> None:
        with pytest.raises(ConfigError):
            cli.parse_seeds(text)

    def test_parse_values(self) -> None:
        assert cli.parse_values("5,10,20.5") == [5.0, 10.0, 20.5]

    def test_parse_values_rejects(self) -> None:
        with pytest.raises(ConfigError, match="comma-separated numbers"):
            cli.parse_values("5,x")

    def test_label_index_or_name(self) -> None:
        args = cli.build_parser().parse_args(["run", "--label", "3"])
        named = cli.build_parser().parse_args(["run", "--label", "class"])

        assert args.label == 3
        assert named.label == "class"


class TestCostModelCommand:
    """Tests for the cost-model subcommand."""

    def test_prints_estimate(self, workdir: Path, capsys: pytest.CaptureFixture[str]) -> None:
        code = cli.main(["cost-model", "--r", "13", "--e", "50", "--q", "10", "--f", "10"])

        result = json.loads(capsys.readouterr().out)
        assert code == cli.EXIT_OK
        assert result["t_chc"] == 650
        assert result["t_chcqx"] == 635
        assert result["qx_cheaper"] is True
        assert result["crossover_generation"] == 13

    def test_invalid_arguments_are_config_errors(self, workdir: Path) -> None:
        assert cli.main(["cost-model", "--r", "0"]) == cli.EXIT_CONFIG


class TestRunCommand:
    """Tests for the run subcommand."""

    def test_run_writes_reports(
        self,
        workdir: Path,
        csv_path: Path,
        config_path: Path,
        capsys: pytest.CaptureFixture[str],
    ) -> None:
        out = workdir / "runs"

        code = cli.main(
            [
                "run",
                "--data", str(csv_path),
                "--label", "class",
                "--method", "chc_qx",
                "--seeds", "1,2",
                "--config", str(config_path),
                "--out", str(out),
            ]
        )  # fmt: skip

        assert code == cli.EXIT_OK
        assert (out / "chc_qx_seed1.json").exists()
        assert (out / "chc_qx_seed2.json").exists()
        summary = json.loads(capsys.readouterr().out.splitlines()[-1])
        assert summary["method"] == "chc_qx"
        assert summary["runs"] == 2

    def test_bad_seeds_exit_config(self, workdir: Path, csv_path: Path) -> None:
        assert cli.main(["run", "--data", str(csv_path), "--seeds", "x"]) == cli.EXIT_CONFIG

    def test_missing_dataset_exits_data(self, workdir: Path) -> None:
        code = cli.main(["run", "--data", str(workdir / "missing.csv"), "--seeds", "1"])

        assert code == cli.EXIT_DATA

    def test_unexpected_failure_exits_runtime(
        self, workdir: Path, csv_path: Path, monkeypatch: pytest.MonkeyPatch
    ) -> None:
        def boom(*args: object, **kwargs: object) -> None:
            raise RuntimeError("disk on fire")

        monkeypatch.setattr(cli, "run_experiment", boom)

        assert cli.main(["run", "--data", str(csv_path), "--seeds", "1"]) == cli.EXIT_RUNTIME

    def test_metrics_file_written(self, workdir: Path, monkeypatch: pytest.MonkeyPatch) -> None:
        metrics = workdir / "metrics" / "fsqx.prom"
        monkeypatch.setenv("FSQX_METRICS_FILE", str(metrics))

        assert cli.main(["cost-model", "--r", "5"]) == cli.EXIT_OK
        assert metrics.exists()


class TestCurveCommands:
    """Tests for curve-learning and curve-usefulness."""

    def test_learning_curve_csv(
        self, workdir: Path, csv_path: Path, capsys: pytest.CaptureFixture[str]
    ) -> None:
        out = workdir / "learning.csv"

        code = cli.main(
            [
                "curve-learning",
                "--data", str(csv_path),
                "--label", "class",
                "--n0", "4",
                "--seed", "0",
                "--out", str(out),
            ]
        )  # fmt: skip

        assert code == cli.EXIT_OK
        assert out.read_text().splitlines()[0] == "sample_size,metric"
        assert capsys.readouterr().out.splitlines()[0].startswith("4,")

    def test_usefulness_curve_default_path(self, workdir: Path, csv_path: Path) -> None:
        code = cli.main(
            [
                "curve-usefulness",
                "--data", str(csv_path),
                "--label", "class",
                "--n0", "8",
                "--ratio", "3",
                "--q", "6",
                "--seed", "2",
            ]
        )  # fmt: skip

        assert code == cli.EXIT_OK
        assert (workdir / "results" / "usefulness_curve_seed2.csv").exists()

    def test_curve_needs_data(self, workdir: Path) -> None:
        assert cli.main(["curve-learning", "--seed", "0"]) == cli.EXIT_CONFIG

    def test_bad_schedule_is_config_error(self, workdir: Path, csv_path: Path) -> None:
        code = cli.main(["curve-learning", "--data", str(csv_path), "--n0", "0", "--seed", "0"])

        assert code == cli.EXIT_CONFIG


class TestSummarizeCommand:
    """Tests for the summarize subcommand."""

    @pytest.fixture
    def report_dir(self, workdir: Path, csv_path: Path, config_path: Path) -> Path:
        out = workdir / "runs"
        for method in ("baseline", "chc"):
            code = cli.main(
                [
                    "run",
                    "--data", str(csv_path),
                    "--label", "class",
                    "--method", method,
                    "--seeds", "1,2,3",
                    "--config", str(config_path),
                    "--out", str(out),
                ]
            )  # fmt: skip
            assert code == cli.EXIT_OK
        return out

    def test_summary_file_and_comparison(
        self, report_dir: Path, capsys: pytest.CaptureFixture[str]
    ) -> None:
        capsys.readouterr()
        args = ["summarize", "--reports", str(report_dir), "--compare", "chc", "baseline"]

        code = cli.main(args)

        lines = capsys.readouterr().out.splitlines()
        assert code == cli.EXIT_OK
        summaries = json.loads((report_dir / "summary.json").read_text())
        assert {s["method"] for s in summaries} == {"baseline", "chc"}
        assert json.loads(lines[-1])["pairs"] == 3

    def test_missing_directory_exits_data(self, workdir: Path) -> None:
        code = cli.main(["summarize", "--reports", str(workdir / "nowhere")])

        assert code == cli.EXIT_DATA

    def test_empty_directory_exits_data(self, workdir: Path) -> None:
        empty = workdir / "empty"
        empty.mkdir()

        assert cli.main(["summarize", "--reports", str(empty)]) == cli.EXIT_DATA

    def test_compare_without_common_seeds_exits_data(self, report_dir: Path) -> None:
        code = cli.main(["summarize", "--reports", str(report_dir), "--compare", "chc", "pso"])

        assert code == cli.EXIT_DATA


def test_sweep_command(workdir: Path, csv_path: Path, config_path: Path) -> None:
    """Test that sweep writes one report directory per value."""
    out = workdir / "sweep"

    code = cli.main(
        [
            "sweep",
            "--data", str(csv_path),
            "--label", "class",
            "--parameter", "f",
            "--values", "2,4",
            "--method", "chc_qx",
            "--seeds", "1",
            "--config", str(config_path),
            "--out", str(out),
        ]
    )  # fmt: skip

    assert code == cli.EXIT_OK
    assert (out / "f_2" / "chc_qx_seed1.json").exists()
    assert (out / "f_4" / "chc_qx_seed1.json").exists()
