"""Executes validated configs and lays out the output directory:
config snapshot, trial ledger, CSV export, and exit summary, so downstream
tooling needs nothing beyond the directory path.
"""

from __future__ import annotations

import json
from pathlib import Path

from .config import MatrixConfig, RunConfig
from .history import export_csv
from .matrix import run_matrix
from .study import run_study

CONFIG_SNAPSHOT = "config.json"
LEDGER_FILE = "trials.jsonl"
CSV_FILE = "trials.csv"
SUMMARY_FILE = "summary.json"
CELLS_FILE = "cells.csv"
CURVES_FILE = "curves.csv"

DEFAULT_OUTPUT = "runs/out"


def _resolve_output(cfg_dir: str | None, override: str | None) -> Path:
    out = Path(override or cfg_dir or DEFAULT_OUTPUT)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _snapshot(cfg: RunConfig | MatrixConfig, out: Path) -> None:
    doc = cfg.model_dump(mode="json")
    doc["output"]["dir"] = str(out)
    (out / CONFIG_SNAPSHOT).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def execute_run(cfg: RunConfig, output_dir: str | None = None, client=None) -> dict:
    """Run one study and write its artifacts. Returns the exit summary."""
    out = _resolve_output(cfg.output.dir, output_dir)
    _snapshot(cfg, out)
    study_cfg = cfg.to_study_config()
    if client is None and cfg.sampler.kind in ("llm_only", "hybrid"):
        client = cfg.sampler.provider.build()
    result = run_study(study_cfg, client=client, ledger_path=out / LEDGER_FILE)
    export_csv(result.trials, out / CSV_FILE)
    summary = result.summary()
    summary["output_dir"] = str(out)
    summary["ledger"] = str(out / LEDGER_FILE)
    summary["incidents"] = [
        {"iteration": i.iteration, "kind": i.kind, "detail": i.detail} for i in result.incidents
    ]
    (out / SUMMARY_FILE).write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    return summary


def execute_matrix(cfg: MatrixConfig, output_dir: str | None = None, client_factory=None) -> dict:
    """Run the comparison matrix and write the two CSVs plus a summary."""
    out = _resolve_output(cfg.output.dir, output_dir)
    _snapshot(cfg, out)
    base = RunConfig(
        task=cfg.task,
        search_space=cfg.search_space,
        study=cfg.study,
        history=cfg.history,
        objective=cfg.objectives[0],
    )

    def factory(study_id: str, sampler_name: str):
        if client_factory is not None:
            return client_factory(study_id, sampler_name)
        block = next(s for s in cfg.samplers if s.name == sampler_name)
        if block.kind in ("llm_only", "hybrid"):
            return block.provider.build()
        return None

    samplers = [(s.name, base.to_study_config(sampler=s)) for s in cfg.samplers]
    objectives = [(o.label(), o.to_objective()) for o in cfg.objectives]
    result = run_matrix(
        samplers,
        objectives,
        repeats=cfg.repeats,
        workers=cfg.workers,
        output_dir=out,
        client_factory=factory,
    )
    summary = {
        "output_dir": str(out),
        "cells_csv": str(out / CELLS_FILE),
        "curves_csv": str(out / CURVES_FILE),
        "cells": [
            {
                "study_id": c.study_id,
                "best_score": c.best_score,
                "iterations": c.iterations,
                "stop_reason": c.stop_reason,
                "failed": c.failed,
                "error": c.error,
            }
            for c in result.cells
        ],
    }
    (out / SUMMARY_FILE).write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    return summary
