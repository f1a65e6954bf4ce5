"""Comparison-matrix harness: every (sampler, objective, repeat) cell runs
one study with a repeat-offset seed; failed cells are recorded and the
matrix continues. Output is two CSVs: per-cell results and per-iteration
best-so-far curves.
"""

from __future__ import annotations

import csv
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import TunelabError
from .llm.client import ChatClient
from .objectives import ObjectiveSpec
from .study import MINIMIZE, StudyConfig, StudyResult, run_study

log = logging.getLogger("tunelab.matrix")

CELLS_HEADER = ["study_id", "sampler", "objective", "repeat", "seed",
                "best_score", "iterations", "stop_reason", "failed", "error"]
CURVES_HEADER = ["study_id", "iteration", "best_so_far"]


@dataclass
class MatrixCell:
    study_id: str
    sampler: str
    objective: str
    repeat: int
    seed: int
    best_score: float | None = None
    iterations: int = 0
    stop_reason: str = ""
    failed: bool = False
    error: str = ""
    curve: list[float] = field(default_factory=list)


@dataclass
class MatrixResult:
    cells: list[MatrixCell]

    def write_csv(self, cells_path: str | Path, curves_path: str | Path) -> None:
        with open(cells_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(CELLS_HEADER)
            for cell in self.cells:
                writer.writerow([
                    cell.study_id, cell.sampler, cell.objective, cell.repeat, cell.seed,
                    "" if cell.best_score is None else cell.best_score,
                    cell.iterations, cell.stop_reason, cell.failed, cell.error,
                ])
        with open(curves_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(CURVES_HEADER)
            for cell in self.cells:
                for iteration, best in enumerate(cell.curve):
                    writer.writerow([cell.study_id, iteration, best])


def best_so_far_curve(result: StudyResult, direction: str) -> list[float]:
    better = min if direction == MINIMIZE else max
    curve: list[float] = []
    for trial in result.trials:
        curve.append(trial.score if not curve else better(curve[-1], trial.score))
    return curve


def run_matrix(
    samplers: list[tuple[str, StudyConfig]],
    objectives: list[tuple[str, ObjectiveSpec]],
    repeats: int = 1,
    workers: int = 1,
    output_dir: str | Path | None = None,
    client_factory=None,
) -> MatrixResult:
    """Run every (sampler config, objective, repeat) combination.

    Each repeat r uses ``base seed + r`` so rows differ only in seed-derived
    fields. ``client_factory(study_id, sampler_name)`` may supply a chat
    client per cell (tests inject mocks this way).
    """
    if repeats < 1:
        raise TunelabError("repeats must be >= 1")
    out = Path(output_dir) if output_dir else None
    if out:
        out.mkdir(parents=True, exist_ok=True)

    jobs: list[tuple] = []
    for sampler_name, base_cfg in samplers:
        for objective_name, objective in objectives:
            for repeat in range(repeats):
                study_id = f"{sampler_name}__{objective_name}__r{repeat}"
                cfg = replace(base_cfg, objective=objective, seed=base_cfg.seed + repeat)
                jobs.append((study_id, cfg, sampler_name, objective_name, repeat))

    def run_cell(job) -> MatrixCell:
        study_id, cfg, sampler_name, objective_name, repeat = job
        cell = MatrixCell(
            study_id=study_id, sampler=sampler_name, objective=objective_name,
            repeat=repeat, seed=cfg.seed,
        )
        ledger = out / "cells" / study_id / "trials.jsonl" if out else None
        client: ChatClient | None = (
            client_factory(study_id, sampler_name) if client_factory else None
        )
        try:
            result = run_study(cfg, client=client, ledger_path=ledger)
        except TunelabError as exc:
            cell.failed = True
            cell.error = str(exc)
            log.warning("cell %s failed: %s", study_id, exc)
            return cell
        cell.best_score = result.best_score
        cell.iterations = result.iterations
        cell.stop_reason = result.stop_reason
        cell.curve = best_so_far_curve(result, cfg.direction)
        return cell

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            cells = list(pool.map(run_cell, jobs))
    else:
        cells = [run_cell(job) for job in jobs]

    result = MatrixResult(cells=cells)
    if out:
        result.write_csv(out / "cells.csv", out / "curves.csv")
    return result
