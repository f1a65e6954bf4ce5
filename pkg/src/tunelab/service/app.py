"""HTTP face of the package: a run-hosting service.

Studies and matrices execute synchronously inside the request (desk-scale
objectives finish in seconds; long-running external objectives should be
driven through dedicated workers). Configuration problems map to 400 with
a path-precise message, runtime failures to 500.
"""

from __future__ import annotations

import math

from fastapi import FastAPI, HTTPException

from ..config import MatrixConfig, RunConfig
from ..errors import ConfigurationError, TunelabError
from ..history import read_ledger
from ..runner import execute_matrix, execute_run
from .models import (
    HealthResponse,
    LedgerRequest,
    LedgerResponse,
    LedgerRow,
    MatrixRequest,
    MatrixResponse,
    RunRequest,
    RunResponse,
)

app = FastAPI(title="tunelab", version="0.1.0")


@app.get("/health", response_model=HealthResponse)
def health() -> HealthResponse:
    return HealthResponse(status="ok", version="0.1.0")


@app.get("/schema/run")
def run_schema() -> dict:
    return RunConfig.model_json_schema()


@app.get("/schema/matrix")
def matrix_schema() -> dict:
    return MatrixConfig.model_json_schema()


@app.post("/runs", response_model=RunResponse)
def create_run(request: RunRequest) -> RunResponse:
    try:
        summary = execute_run(request.config, output_dir=request.output_dir)
    except ConfigurationError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
    except TunelabError as exc:
        raise HTTPException(status_code=500, detail=str(exc)) from exc
    return RunResponse(**summary)


@app.post("/matrix", response_model=MatrixResponse)
def create_matrix(request: MatrixRequest) -> MatrixResponse:
    try:
        summary = execute_matrix(request.config, output_dir=request.output_dir)
    except ConfigurationError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
    except TunelabError as exc:
        raise HTTPException(status_code=500, detail=str(exc)) from exc
    return MatrixResponse(**summary)


@app.post("/ledger/inspect", response_model=LedgerResponse)
def inspect_ledger(request: LedgerRequest) -> LedgerResponse:
    try:
        records, skipped = read_ledger(request.path)
    except OSError as exc:
        raise HTTPException(status_code=404, detail=str(exc)) from exc
    better = min if request.direction == "minimize" else max
    rows: list[LedgerRow] = []
    best = math.inf if request.direction == "minimize" else -math.inf
    for record in records:
        best = better(best, record.score)
        rows.append(
            LedgerRow(
                iteration=record.iteration,
                score=record.score,
                best_so_far=best,
                source=record.source,
            )
        )
    return LedgerResponse(rows=rows, skipped=skipped)
