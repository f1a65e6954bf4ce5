import json

import pytest
import yaml
from click.testing import CliRunner

from tunelab.cli import main
from tunelab.history import TrialRecord


@pytest.fixture
def runner():
    return CliRunner()


def write_run_config(tmp_path, **study):
    doc = {
        "task": {
            "model_name": "gbm",
            "problem_description": "toy",
            "metric": "mae",
            "direction": "minimize",
        },
        "search_space": {
            "params": [
                {"name": "x1", "kind": "continuous", "low": -5.12, "high": 5.12},
                {"name": "x2", "kind": "continuous", "low": -5.12, "high": 5.12},
            ]
        },
        "objective": {"kind": "builtin", "name": "sphere"},
        "study": {"max_iterations": 6, "timestamp_mode": "none", **study},
    }
    path = tmp_path / "run.yaml"
    path.write_text(yaml.safe_dump(doc))
    return path


def write_matrix_config(tmp_path, samplers=None):
    doc = {
        "task": {
            "model_name": "gbm",
            "problem_description": "toy",
            "metric": "mae",
            "direction": "minimize",
        },
        "search_space": {
            "params": [
                {"name": "x1", "kind": "continuous", "low": -5.12, "high": 5.12},
                {"name": "x2", "kind": "continuous", "low": -5.12, "high": 5.12},
            ]
        },
        "objectives": [{"kind": "builtin", "name": "sphere"}],
        "samplers": samplers
        if samplers is not None
        else [{"name": "tpe", "kind": "tpe_only"}, {"name": "rand", "kind": "random"}],
        "study": {"max_iterations": 4, "timestamp_mode": "none"},
        "repeats": 1,
    }
    path = tmp_path / "matrix.yaml"
    path.write_text(yaml.safe_dump(doc))
    return path


class TestRunCommand:
    def test_happy_path_status_zero_and_ledger(self, runner, tmp_path):
        cfg = write_run_config(tmp_path)
        out = tmp_path / "out"
        result = runner.invoke(main, ["run", "--config", str(cfg), "--output", str(out)])
        assert result.exit_code == 0, result.output
        lines = (out / "trials.jsonl").read_text().splitlines()
        assert 0 < len(lines) <= 6
        summary = json.loads(result.output)
        assert summary["stop_reason"] == "completed"

    def test_patience_zero_exits_two_naming_field(self, runner, tmp_path):
        cfg = write_run_config(tmp_path, patience=0)
        result = runner.invoke(main, ["run", "--config", str(cfg), "--output", str(tmp_path / "o")])
        assert result.exit_code == 2
        assert "study.patience" in result.output

    def test_seed_override_recorded(self, runner, tmp_path):
        cfg = write_run_config(tmp_path)
        out = tmp_path / "out"
        result = runner.invoke(
            main,
            ["run", "--config", str(cfg), "--output", str(out), "--set", "study.seed=7"],
        )
        assert result.exit_code == 0, result.output
        snapshot = json.loads((out / "config.json").read_text())
        assert snapshot["study"]["seed"] == 7
        summary = json.loads((out / "summary.json").read_text())
        assert summary["seed"] == 7

    def test_quiet_suppresses_output(self, runner, tmp_path):
        cfg = write_run_config(tmp_path)
        result = runner.invoke(
            main, ["run", "--config", str(cfg), "--output", str(tmp_path / "o"), "--quiet"]
        )
        assert result.exit_code == 0 and result.output == ""

    def test_config_round_trip_reproduces_ledger(self, runner, tmp_path):
        cfg = write_run_config(tmp_path)
        first = tmp_path / "first"
        runner.invoke(main, ["run", "--config", str(cfg), "--output", str(first), "--quiet"])
        snapshot = first / "config.json"
        second = tmp_path / "second"
        result = runner.invoke(
            main, ["run", "--config", str(snapshot), "--output", str(second), "--quiet"]
        )
        assert result.exit_code == 0
        assert (first / "trials.jsonl").read_bytes() == (second / "trials.jsonl").read_bytes()

    def test_no_secret_values_in_artifacts(self, runner, tmp_path, monkeypatch):
        monkeypatch.setenv("SOME_PROVIDER_KEY", "super-secret-value")
        cfg = write_run_config(tmp_path)
        out = tmp_path / "out"
        result = runner.invoke(main, ["run", "--config", str(cfg), "--output", str(out)])
        assert result.exit_code == 0
        for artifact in out.iterdir():
            assert "super-secret-value" not in artifact.read_text()
        assert "super-secret-value" not in result.output


class TestMatrixCommand:
    def test_two_by_one_by_one_has_two_rows(self, runner, tmp_path):
        cfg = write_matrix_config(tmp_path)
        out = tmp_path / "m"
        result = runner.invoke(main, ["matrix", "--config", str(cfg), "--output", str(out)])
        assert result.exit_code == 0, result.output
        rows = (out / "cells.csv").read_text().splitlines()
        assert len(rows) == 3  # header + 2 cells

    def test_failing_cell_keeps_status_zero(self, runner, tmp_path):
        cfg_path = write_matrix_config(tmp_path)
        doc = yaml.safe_load(cfg_path.read_text())
        doc["objectives"].append({"kind": "builtin", "name": "discrete_grid"})  # wrong names
        cfg_path.write_text(yaml.safe_dump(doc))
        out = tmp_path / "m2"
        result = runner.invoke(main, ["matrix", "--config", str(cfg_path), "--output", str(out)])
        assert result.exit_code == 0, result.output
        body = json.loads(result.output)
        assert any(cell["failed"] for cell in body["cells"])
        assert any(not cell["failed"] for cell in body["cells"])

    def test_empty_sampler_list_is_config_error(self, runner, tmp_path):
        cfg = write_matrix_config(tmp_path, samplers=[])
        result = runner.invoke(main, ["matrix", "--config", str(cfg), "--output", str(tmp_path / "x")])
        assert result.exit_code == 2
        assert "samplers" in result.output


class TestHistoryCommand:
    def write_ledger(self, tmp_path, n=3, corrupt=0):
        path = tmp_path / "trials.jsonl"
        lines = [
            TrialRecord(i, {"x": 0.1 * i}, float(n - i), "tpe", 0).to_line() for i in range(n)
        ]
        for _ in range(corrupt):
            lines.insert(1, "{broken")
        path.write_text("\n".join(lines) + "\n")
        return path

    def test_csv_rows_plus_header(self, runner, tmp_path):
        path = self.write_ledger(tmp_path, n=3)
        result = runner.invoke(main, ["history", str(path), "--format", "csv"])
        assert result.exit_code == 0
        lines = result.output.strip().splitlines()
        assert lines[0] == "iteration,score,best_so_far,source"
        assert len(lines) == 4

    def test_table_format(self, runner, tmp_path):
        path = self.write_ledger(tmp_path, n=2)
        result = runner.invoke(main, ["history", str(path)])
        assert result.exit_code == 0
        assert result.output.splitlines()[0].split() == ["iteration", "score", "best_so_far", "source"]

    def test_empty_ledger_header_only_nonzero(self, runner, tmp_path):
        path = tmp_path / "empty.jsonl"
        path.write_text("")
        result = runner.invoke(main, ["history", str(path), "--format", "csv"])
        assert result.exit_code != 0
        assert result.output.strip().splitlines() == ["iteration,score,best_so_far,source"]

    def test_corrupt_line_skipped_with_warning(self, runner, tmp_path):
        path = self.write_ledger(tmp_path, n=5, corrupt=1)
        result = runner.invoke(main, ["history", str(path), "--format", "csv"])
        assert result.exit_code == 0
        lines = result.output.strip().splitlines()
        data = [l for l in lines if not l.startswith(("warning", "iteration"))]
        assert len(data) == 5
        assert "warning" in result.output

    def test_all_corrupt_ledger_is_nonzero(self, runner, tmp_path):
        path = tmp_path / "broken.jsonl"
        path.write_text("{nope\n{also broken\n")
        result = runner.invoke(main, ["history", str(path), "--format", "csv"])
        assert result.exit_code != 0
        assert "warning" in result.output

    def test_maximize_direction_flag(self, runner, tmp_path):
        path = self.write_ledger(tmp_path, n=3)  # scores 3, 2, 1
        result = runner.invoke(main, ["history", str(path), "--format", "csv", "--direction", "maximize"])
        best = [line.split(",")[2] for line in result.output.strip().splitlines()[1:]]
        assert best == ["3.0", "3.0", "3.0"]


class TestSchemaCommand:
    def test_prints_json_schema(self, runner):
        result = runner.invoke(main, ["schema", "run"])
        assert result.exit_code == 0
        assert "task" in json.loads(result.output)["properties"]
