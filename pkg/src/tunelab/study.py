"""The optimization loop: suggest, evaluate, record, condense history,
check early stopping. Improvement is strict (ties never reset patience),
failed evaluations score the worst-possible sentinel instead of aborting,
and every trial is flushed to the ledger as it completes.
"""

from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, EvaluatorError, SamplerError
from .history import (
    INTELLIGENT_SUMMARY,
    ChatHistory,
    HistoryPolicy,
    LedgerWriter,
    TrialRecord,
    now_timestamp,
    rolling_trim,
    should_summarize,
    summarize,
)
from .hybrid import HybridConfig, HybridSuggestion, suggest_hybrid, warm_start
from .llm.client import ChatClient, ChatMessage, ProviderConfig, build_client
from .llm.prompts import PLAIN, REASONING, TaskDescription, system_message
from .llm.sampler import suggest_llm, warm_start_llm
from .objectives import BUILTIN, ObjectiveSpec, default_space, evaluate
from .space import Params, SearchSpace, uniform_assignment, validate_assignment
from .tpe import MAXIMIZE, MINIMIZE, ObservationSet, suggest_tpe

log = logging.getLogger("tunelab.study")

TPE_ONLY = "tpe_only"
LLM_ONLY = "llm_only"
HYBRID = "hybrid"
RANDOM = "random"

SAMPLERS = (TPE_ONLY, LLM_ONLY, HYBRID, RANDOM)

COMPLETED = "completed"
EARLY_STOPPED = "early_stopped"
ABORTED = "aborted"

TIMESTAMP_WALL = "wall"
TIMESTAMP_NONE = "none"


@dataclass
class TpeSettings:
    gamma: float = 0.25
    n_candidates: int = 24


@dataclass
class StudyConfig:
    task: TaskDescription
    space: SearchSpace
    objective: ObjectiveSpec
    sampler: str = TPE_ONLY
    direction: str = MINIMIZE
    max_iterations: int = 50
    patience: int | None = None
    min_delta: float = 0.0
    seed: int = 42
    tpe: TpeSettings = field(default_factory=TpeSettings)
    hybrid: HybridConfig = field(default_factory=HybridConfig)
    history: HistoryPolicy = field(default_factory=HistoryPolicy)
    provider: ProviderConfig = field(default_factory=ProviderConfig)
    llm_reasoning: bool = False
    timestamp_mode: str = TIMESTAMP_WALL

    def __post_init__(self):
        if self.sampler not in SAMPLERS:
            raise ConfigurationError(f"unknown sampler {self.sampler!r}")
        if self.direction not in (MINIMIZE, MAXIMIZE):
            raise ConfigurationError("direction must be minimize or maximize")
        if self.direction != self.task.direction:
            raise ConfigurationError("study direction must match the task direction")
        if self.max_iterations < 1:
            raise ConfigurationError("max_iterations must be >= 1")
        if self.patience is not None and self.patience < 1:
            raise ConfigurationError("patience must be >= 1 when present")
        if self.timestamp_mode not in (TIMESTAMP_WALL, TIMESTAMP_NONE):
            raise ConfigurationError(f"unknown timestamp_mode {self.timestamp_mode!r}")


@dataclass
class StudyIncident:
    iteration: int
    kind: str
    detail: str


@dataclass
class StudyResult:
    best_params: Params
    best_score: float
    trials: list[TrialRecord]
    stop_reason: str
    iterations: int
    wall_time: float
    seed: int
    incidents: list[StudyIncident] = field(default_factory=list)
    summarized_at: list[int] = field(default_factory=list)

    def summary(self) -> dict:
        return {
            "best_params": self.best_params,
            "best_score": self.best_score,
            "stop_reason": self.stop_reason,
            "iterations": self.iterations,
            "wall_time": round(self.wall_time, 3),
            "seed": self.seed,
        }


def sentinel_score(direction: str) -> float:
    return math.inf if direction == MINIMIZE else -math.inf


def is_improvement(score: float, best: float | None, direction: str, min_delta: float = 0.0) -> bool:
    """Strict improvement; a tie with the best increments patience."""
    if best is None:
        return True
    if direction == MINIMIZE:
        return score < best - min_delta
    return score > best + min_delta


def early_stop_check(counter: int, patience: int | None) -> bool:
    return patience is not None and counter >= patience


def _check_objective_names(cfg: StudyConfig) -> None:
    if cfg.objective.kind != BUILTIN:
        return
    expected = set(default_space(cfg.objective.name).names())
    actual = set(cfg.space.names())
    if expected != actual:
        raise ConfigurationError(
            f"objective {cfg.objective.name!r} expects parameters {sorted(expected)}, "
            f"space declares {sorted(actual)}"
        )


class _Loop:
    """Mutable run state for one study."""

    def __init__(self, cfg: StudyConfig, client: ChatClient | None, writer: LedgerWriter | None):
        self.cfg = cfg
        self.writer = writer
        seeds = np.random.SeedSequence(cfg.seed).spawn(4)
        self.coin_rng = np.random.default_rng(seeds[0])
        self.tpe_rng = np.random.default_rng(seeds[1])
        self.init_rng = np.random.default_rng(seeds[2])
        self.random_rng = np.random.default_rng(seeds[3])
        self.space = cfg.space.copy()
        self.obs = ObservationSet(direction=cfg.direction)
        self.chat = ChatHistory()
        self.best_score: float | None = None
        self.best_params: Params = {}
        self.no_improve = 0
        self.trials: list[TrialRecord] = []
        self.incidents: list[StudyIncident] = []
        self.summarized_at: list[int] = []
        self.needs_llm = cfg.sampler in (LLM_ONLY, HYBRID)
        self.client = client
        if self.needs_llm and self.client is None:
            self.client = build_client(cfg.provider)

    def note(self, iteration: int, kind: str, detail: str) -> None:
        self.incidents.append(StudyIncident(iteration, kind, detail))
        log.warning("iteration %d %s: %s", iteration, kind, detail)

    def absorb(self, iteration: int, incidents) -> None:
        for inc in incidents:
            self.note(iteration, inc.kind, inc.detail)

    def initial_suggestion(self) -> HybridSuggestion:
        cfg = self.cfg
        if cfg.sampler == HYBRID:
            suggestion = warm_start(cfg.hybrid, cfg.task, self.space, self.client, self.init_rng)
            if not self.chat.messages:
                self.chat.append(system_message(cfg.task, cfg.hybrid.llm_mode, cfg.history.mode))
            return suggestion
        if cfg.sampler == LLM_ONLY:
            try:
                outcome = warm_start_llm(
                    cfg.task,
                    self.space,
                    self.client,
                    self.chat.messages,
                    reasoning=cfg.llm_reasoning,
                    history_mode=cfg.history.mode,
                )
                return HybridSuggestion(
                    assignment=outcome.assignment,
                    source="init_llm",
                    space=outcome.space,
                    reason=outcome.reason,
                    incidents=outcome.incidents,
                )
            except SamplerError as exc:
                self.note(0, "init_downgrade", str(exc))
                return HybridSuggestion(
                    assignment=uniform_assignment(self.space, self.init_rng),
                    source="init_random",
                    space=self.space,
                    fallback=True,
                )
        return HybridSuggestion(
            assignment=uniform_assignment(self.space, self.init_rng),
            source="init_random",
            space=self.space,
        )

    def next_suggestion(self, iteration: int) -> HybridSuggestion:
        cfg = self.cfg
        if cfg.sampler == TPE_ONLY:
            assignment = suggest_tpe(
                self.obs, self.space, n_candidates=cfg.tpe.n_candidates,
                gamma=cfg.tpe.gamma, rng=self.tpe_rng,
            )
            return HybridSuggestion(assignment=assignment, source="tpe", space=self.space)
        if cfg.sampler == RANDOM:
            return HybridSuggestion(
                assignment=uniform_assignment(self.space, self.random_rng),
                source="random",
                space=self.space,
            )
        if cfg.sampler == LLM_ONLY:
            try:
                outcome = suggest_llm(
                    cfg.task,
                    self.space,
                    self.client,
                    self.chat.messages,
                    best_score=self.best_score,
                    best_params=self.best_params,
                    mode=REASONING if cfg.llm_reasoning else PLAIN,
                    history_mode=cfg.history.mode,
                )
                return HybridSuggestion(
                    assignment=outcome.assignment,
                    source="llm",
                    space=outcome.space,
                    reason=outcome.reason,
                    incidents=outcome.incidents,
                )
            except SamplerError as exc:
                assignment = suggest_tpe(
                    self.obs, self.space, n_candidates=cfg.tpe.n_candidates,
                    gamma=cfg.tpe.gamma, rng=self.tpe_rng,
                )
                suggestion = HybridSuggestion(
                    assignment=assignment, source="tpe", space=self.space, fallback=True
                )
                self.note(iteration, "llm_fallback", str(exc))
                return suggestion
        return suggest_hybrid(
            cfg.hybrid,
            iteration,
            cfg.task,
            self.space,
            self.obs,
            self.best_score,
            self.best_params,
            self.client,
            self.chat.messages,
            self.coin_rng,
            self.tpe_rng,
            gamma=cfg.tpe.gamma,
            n_candidates=cfg.tpe.n_candidates,
        )

    def run_trial(self, iteration: int, suggestion: HybridSuggestion) -> None:
        cfg = self.cfg
        self.space = suggestion.space
        self.absorb(iteration, suggestion.incidents)
        if suggestion.fallback and not any(
            i.iteration == iteration and i.kind in ("llm_fallback", "init_downgrade")
            for i in self.incidents
        ):
            self.note(iteration, "llm_fallback", "LLM branch failed; TPE supplied the trial")
        report = validate_assignment(self.space, suggestion.assignment)
        if not report.ok:  # samplers guarantee validity; guard against regressions
            raise ConfigurationError(f"invalid suggestion: {[v.message for v in report.violations]}")
        try:
            score = evaluate(cfg.objective, suggestion.assignment)
            failed = False
        except EvaluatorError as exc:
            score = sentinel_score(cfg.direction)
            failed = True
            self.note(iteration, "evaluator_error", str(exc))
        record = TrialRecord(
            iteration=iteration,
            params=dict(suggestion.assignment),
            score=score,
            source=suggestion.source,
            space_version=self.space.version,
            reason=suggestion.reason,
            timestamp=now_timestamp() if cfg.timestamp_mode == TIMESTAMP_WALL else None,
        )
        self.trials.append(record)
        if self.writer is not None:
            self.writer.write(record)
        if not failed:
            self.obs.add(suggestion.assignment, score)
        if is_improvement(score, self.best_score, cfg.direction, cfg.min_delta):
            self.best_score = score
            self.best_params = dict(suggestion.assignment)
            self.no_improve = 0
        else:
            self.no_improve += 1
        if self.needs_llm:
            self.chat.append(
                ChatMessage("user", json.dumps({"params": suggestion.assignment, "score": score}))
            )
            self.maintain_history(iteration)

    def maintain_history(self, iteration: int) -> None:
        policy = self.cfg.history
        if policy.mode == INTELLIGENT_SUMMARY:
            if should_summarize(policy, iteration, self.chat):
                self.chat = summarize(
                    self.client, self.chat, self.best_score, self.best_params, iteration
                )
                self.summarized_at.append(iteration)
        else:
            self.chat = rolling_trim(policy, self.chat)


def run_study(
    cfg: StudyConfig,
    client: ChatClient | None = None,
    ledger_path: str | Path | None = None,
) -> StudyResult:
    """Execute at most max_iterations suggest/evaluate cycles and return the
    result; iteration 0 is the initialization trial and participates in best
    tracking."""
    _check_objective_names(cfg)
    start = time.perf_counter()
    loop = _Loop(cfg, client, None)  # client construction may refuse before any file is touched
    writer = LedgerWriter(ledger_path) if ledger_path else None
    loop.writer = writer
    stop_reason = COMPLETED
    executed = 0
    try:
        for iteration in range(cfg.max_iterations):
            if iteration == 0:
                suggestion = loop.initial_suggestion()
            else:
                suggestion = loop.next_suggestion(iteration)
            loop.run_trial(iteration, suggestion)
            executed = iteration + 1
            if early_stop_check(loop.no_improve, cfg.patience):
                stop_reason = EARLY_STOPPED
                break
    finally:
        if writer is not None:
            writer.close()
    return StudyResult(
        best_params=loop.best_params,
        best_score=loop.best_score,
        trials=loop.trials,
        stop_reason=stop_reason,
        iterations=executed,
        wall_time=time.perf_counter() - start,
        seed=cfg.seed,
        incidents=loop.incidents,
        summarized_at=loop.summarized_at,
    )
