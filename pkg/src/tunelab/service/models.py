"""Request and response bodies for the tuning service."""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field

from ..config import MatrixConfig, RunConfig


class RunRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    config: RunConfig
    output_dir: str | None = None


class IncidentOut(BaseModel):
    iteration: int
    kind: str
    detail: str


class RunResponse(BaseModel):
    best_params: dict
    best_score: float
    stop_reason: str
    iterations: int
    wall_time: float
    seed: int
    output_dir: str
    ledger: str
    incidents: list[IncidentOut] = Field(default_factory=list)


class MatrixRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    config: MatrixConfig
    output_dir: str | None = None


class CellOut(BaseModel):
    study_id: str
    best_score: float | None = None
    iterations: int
    stop_reason: str
    failed: bool
    error: str = ""


class MatrixResponse(BaseModel):
    output_dir: str
    cells_csv: str
    curves_csv: str
    cells: list[CellOut]


class LedgerRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    path: str
    direction: str = "minimize"


class LedgerRow(BaseModel):
    iteration: int
    score: float
    best_so_far: float
    source: str


class LedgerResponse(BaseModel):
    rows: list[LedgerRow]
    skipped: int


class HealthResponse(BaseModel):
    status: str
    version: str
