import json

import pytest
from fastapi.testclient import TestClient

from tunelab.history import TrialRecord
from tunelab.service.app import app


@pytest.fixture
def client():
    return TestClient(app)


def run_doc(tmp_path, **study):
    return {
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
        "study": {"max_iterations": 5, "timestamp_mode": "none", **study},
        "output": {"dir": str(tmp_path / "out")},
    }


class TestHealthAndSchema:
    def test_health(self, client):
        body = client.get("/health").json()
        assert body["status"] == "ok"

    def test_schemas_served(self, client):
        assert "task" in client.get("/schema/run").json()["properties"]
        assert "samplers" in client.get("/schema/matrix").json()["properties"]


class TestRunsEndpoint:
    def test_run_happy_path_writes_artifacts(self, client, tmp_path):
        response = client.post("/runs", json={"config": run_doc(tmp_path)})
        assert response.status_code == 200
        body = response.json()
        assert body["iterations"] == 5
        assert body["stop_reason"] == "completed"
        out = tmp_path / "out"
        assert (out / "trials.jsonl").exists()
        assert (out / "trials.csv").exists()
        assert (out / "config.json").exists()
        assert (out / "summary.json").exists()
        snapshot = json.loads((out / "config.json").read_text())
        assert snapshot["study"]["seed"] == 42

    def test_unknown_key_is_422_with_path(self, client, tmp_path):
        doc = run_doc(tmp_path)
        doc["study"]["patiennce"] = 3
        response = client.post("/runs", json={"config": doc})
        assert response.status_code == 422
        locs = [err["loc"] for err in response.json()["detail"]]
        assert any("patiennce" in loc for loc in locs)

    def test_patience_zero_is_422_naming_field(self, client, tmp_path):
        doc = run_doc(tmp_path, patience=0)
        response = client.post("/runs", json={"config": doc})
        assert response.status_code == 422
        locs = [err["loc"] for err in response.json()["detail"]]
        assert any(loc[-1] == "patience" and "study" in loc for loc in locs)

    def test_missing_api_key_is_400_before_running(self, client, tmp_path, monkeypatch):
        monkeypatch.delenv("NO_SUCH_KEY", raising=False)
        doc = run_doc(tmp_path)
        doc["sampler"] = {
            "kind": "llm_only",
            "provider": {"provider": "openai-compatible", "model": "m", "api_key_env": "NO_SUCH_KEY"},
        }
        response = client.post("/runs", json={"config": doc})
        assert response.status_code == 400
        assert "NO_SUCH_KEY" in response.json()["detail"]
        assert not (tmp_path / "out" / "trials.jsonl").exists() or (
            (tmp_path / "out" / "trials.jsonl").read_text() == ""
        )


class TestMatrixEndpoint:
    def test_matrix_round_trip(self, client, tmp_path):
        doc = {
            "task": run_doc(tmp_path)["task"],
            "search_space": run_doc(tmp_path)["search_space"],
            "samplers": [
                {"name": "tpe", "kind": "tpe_only"},
                {"name": "rand", "kind": "random"},
            ],
            "objectives": [{"kind": "builtin", "name": "sphere"}],
            "study": {"max_iterations": 5, "timestamp_mode": "none"},
            "repeats": 1,
            "output": {"dir": str(tmp_path / "m")},
        }
        response = client.post("/matrix", json={"config": doc})
        assert response.status_code == 200
        body = response.json()
        assert len(body["cells"]) == 2
        assert (tmp_path / "m" / "cells.csv").exists()
        assert (tmp_path / "m" / "curves.csv").exists()

    def test_matrix_builds_mock_clients_per_cell(self, client, tmp_path):
        base = run_doc(tmp_path)
        doc = {
            "task": base["task"],
            "search_space": base["search_space"],
            "samplers": [
                {
                    "name": "hyb",
                    "kind": "hybrid",
                    "hybrid": {"init_mode": "random_init"},
                    "provider": {"provider": "mock", "default_reply": '{"x1": 0.1, "x2": 0.1}'},
                }
            ],
            "objectives": [{"kind": "builtin", "name": "sphere"}],
            "study": {"max_iterations": 6, "timestamp_mode": "none"},
            "repeats": 2,
            "output": {"dir": str(tmp_path / "mm")},
        }
        response = client.post("/matrix", json={"config": doc})
        assert response.status_code == 200
        assert all(not cell["failed"] for cell in response.json()["cells"])


class TestLedgerEndpoint:
    def test_rows_and_best_so_far(self, client, tmp_path):
        path = tmp_path / "trials.jsonl"
        records = [
            TrialRecord(0, {"x": 0.1}, 5.0, "init_random", 0),
            TrialRecord(1, {"x": 0.2}, 3.0, "tpe", 0),
            TrialRecord(2, {"x": 0.3}, 4.0, "tpe", 0),
        ]
        path.write_text("".join(r.to_line() + "\n" for r in records))
        response = client.post("/ledger/inspect", json={"path": str(path)})
        body = response.json()
        assert [row["best_so_far"] for row in body["rows"]] == [5.0, 3.0, 3.0]
        assert body["skipped"] == 0

    def test_missing_file_is_404(self, client, tmp_path):
        response = client.post("/ledger/inspect", json={"path": str(tmp_path / "nope.jsonl")})
        assert response.status_code == 404
