"""Hybrid LLM-TPE sampling.

Iteration 0 is the warm start (LLM-proposed space and values, or a uniform
draw). Every later iteration draws p ~ U(0,1) from a dedicated stream: the
LLM guides the trial when p falls below the configured probability,
otherwise TPE does. An LLM failure never costs the iteration; the trial
falls back to TPE and the downgrade is recorded.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, SamplerError
from .llm.client import ChatClient, ChatMessage
from .llm.prompts import TPE_INDEPENDENT, TPE_RELATIVE, TaskDescription
from .llm.sampler import Incident, suggest_llm, warm_start_llm
from .space import Params, SearchSpace, uniform_assignment
from .tpe import ObservationSet, suggest_tpe

log = logging.getLogger("tunelab.hybrid")

LLM_INIT = "llm_init"
RANDOM_INIT = "random_init"


@dataclass
class HybridConfig:
    llm_probability: float = 0.5
    init_mode: str = LLM_INIT
    llm_mode: str = TPE_RELATIVE
    seed: int | None = None

    def __post_init__(self):
        if not 0.0 <= self.llm_probability <= 1.0:
            raise ConfigurationError("llm_probability must be within [0, 1]")
        if self.init_mode not in (LLM_INIT, RANDOM_INIT):
            raise ConfigurationError(f"unknown init_mode {self.init_mode!r}")
        if self.llm_mode not in (TPE_RELATIVE, TPE_INDEPENDENT):
            raise ConfigurationError(f"unknown llm_mode {self.llm_mode!r}")


@dataclass
class HybridSuggestion:
    assignment: Params
    source: str  # llm | tpe | init_llm | init_random
    space: SearchSpace
    reason: str | None = None
    fallback: bool = False
    incidents: list[Incident] = field(default_factory=list)


def warm_start(
    cfg: HybridConfig,
    task: TaskDescription,
    space: SearchSpace,
    client: ChatClient | None,
    rng: np.random.Generator,
) -> HybridSuggestion:
    """Iteration-0 choice: LLM initialization adopts the proposed ranges and
    starting values; random initialization keeps the declared space. An LLM
    initialization that exhausts its retries downgrades to the random path.
    """
    if cfg.init_mode == LLM_INIT:
        if client is None:
            raise ConfigurationError("llm_init requires a configured client")
        exchange: list[ChatMessage] = []
        try:
            outcome = warm_start_llm(task, space, client, exchange)
            return HybridSuggestion(
                assignment=outcome.assignment,
                source="init_llm",
                space=outcome.space,
                reason=outcome.reason,
                incidents=outcome.incidents,
            )
        except SamplerError as exc:
            log.warning("LLM init failed, downgrading to random init: %s", exc)
            suggestion = HybridSuggestion(
                assignment=uniform_assignment(space, rng),
                source="init_random",
                space=space,
                fallback=True,
            )
            suggestion.incidents.append(Incident("init_downgrade", str(exc)))
            return suggestion
    return HybridSuggestion(
        assignment=uniform_assignment(space, rng), source="init_random", space=space
    )


def suggest_hybrid(
    cfg: HybridConfig,
    iteration: int,
    task: TaskDescription,
    space: SearchSpace,
    obs: ObservationSet,
    best_score: float,
    best_params: Params,
    client: ChatClient | None,
    chat_messages: list[ChatMessage],
    coin_rng: np.random.Generator,
    tpe_rng: np.random.Generator,
    gamma: float = 0.25,
    n_candidates: int = 24,
) -> HybridSuggestion:
    """One iteration >= 1 suggestion; consumes exactly one coin draw."""
    if iteration < 1:
        raise ConfigurationError("suggest_hybrid handles iterations >= 1 only")
    p = float(coin_rng.random())
    if p < cfg.llm_probability and client is not None:
        try:
            outcome = suggest_llm(
                task,
                space,
                client,
                chat_messages,
                best_score=best_score,
                best_params=best_params,
                mode=cfg.llm_mode,
                first_trial=len(obs) == 0,
            )
            return HybridSuggestion(
                assignment=outcome.assignment,
                source="llm",
                space=outcome.space,
                reason=outcome.reason,
                incidents=outcome.incidents,
            )
        except SamplerError as exc:
            log.warning("LLM branch failed, falling back to TPE: %s", exc)
            assignment = suggest_tpe(obs, space, n_candidates=n_candidates, gamma=gamma, rng=tpe_rng)
            return HybridSuggestion(
                assignment=assignment,
                source="tpe",
                space=space,
                fallback=True,
                incidents=[Incident("llm_fallback", str(exc))],
            )
    assignment = suggest_tpe(obs, space, n_candidates=n_candidates, gamma=gamma, rng=tpe_rng)
    return HybridSuggestion(assignment=assignment, source="tpe", space=space)
