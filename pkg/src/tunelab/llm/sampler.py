"""LLM-driven sampling: build prompts, call the client, parse and repair.

Malformed replies get up to three corrective retries inside the same
conversation; suggestions that land outside the space are clamped rather
than rejected so the iteration budget is never wasted. All recoveries are
surfaced as incidents for the study log.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Callable

from ..errors import ParseError, SamplerError, SchemaError, TransportError
from ..space import (
    CATEGORICAL,
    Params,
    SearchSpace,
    SpaceUpdateReport,
    apply_space_update,
    clamp_assignment,
    validate_assignment,
)
from .client import ChatClient, ChatMessage
from .parsing import (
    parse_independent_fragment,
    parse_init_decision,
    parse_opt_decision,
    parse_relative_fragment,
)
from .prompts import (
    PLAIN,
    REASONING,
    ROLLING_HISTORY,
    TPE_INDEPENDENT,
    TPE_RELATIVE,
    TaskDescription,
    build_init_messages,
    build_opt_messages,
)

log = logging.getLogger("tunelab.llm")

MAX_ATTEMPTS = 4  # one initial call plus three corrective retries


@dataclass
class Incident:
    kind: str
    detail: str


@dataclass
class InitOutcome:
    space: SearchSpace
    assignment: Params
    reason: str | None = None
    incidents: list[Incident] = field(default_factory=list)


@dataclass
class SuggestOutcome:
    assignment: Params
    space: SearchSpace
    update_report: SpaceUpdateReport | None = None
    reason: str | None = None
    incidents: list[Incident] = field(default_factory=list)


class _Conversation:
    """One mutable chat exchange with parse-retry bookkeeping."""

    def __init__(self, client: ChatClient, messages: list[ChatMessage]):
        self.client = client
        self.messages = messages

    def ask(self, user: ChatMessage, parse: Callable[[str], Any], incidents: list[Incident]) -> Any:
        self.messages.append(user)
        last: Exception | None = None
        for attempt in range(MAX_ATTEMPTS):
            try:
                result = self.client.complete(self.messages)
            except TransportError as exc:
                raise SamplerError(f"provider failed: {exc}") from exc
            self.messages.append(ChatMessage("assistant", result.text))
            try:
                return parse(result.text)
            except (ParseError, SchemaError) as exc:
                last = exc
                incidents.append(Incident("llm_retry", str(exc)))
                if attempt < MAX_ATTEMPTS - 1:
                    self.messages.append(
                        ChatMessage(
                            "user",
                            f"Your previous reply was invalid: {exc}. "
                            "Reply again following the required JSON format exactly.",
                        )
                    )
        raise SamplerError(f"retries exhausted: {last}")


def _ensure_valid(space: SearchSpace, assignment: Params, incidents: list[Incident]) -> Params:
    report = validate_assignment(space, assignment)
    if report.ok:
        return assignment
    clamped = clamp_assignment(space, assignment)
    detail = "; ".join(v.message for v in report.violations)
    incidents.append(Incident("llm_clamped", detail))
    log.warning("clamped LLM suggestion: %s", detail)
    return clamped


def _fill_missing(space: SearchSpace, partial: Params, incidents: list[Incident]) -> Params:
    """Deterministic fill for parameters a reply omitted: range midpoint for
    numeric kinds, first choice for categoricals."""
    full = dict(partial)
    filled = []
    for name, spec in space.params.items():
        if name in full:
            continue
        full[name] = spec.choices[0] if spec.kind == CATEGORICAL else (spec.low + spec.high) / 2
        filled.append(name)
    if filled:
        incidents.append(Incident("llm_filled", f"filled omitted parameters: {filled}"))
    return full


def _drop_extras(space: SearchSpace, params: Params, incidents: list[Incident]) -> Params:
    extras = [name for name in params if name not in space.params]
    if extras:
        incidents.append(Incident("llm_dropped", f"dropped unknown parameters: {extras}"))
    return {name: value for name, value in params.items() if name in space.params}


def warm_start_llm(
    task: TaskDescription,
    space: SearchSpace,
    client: ChatClient,
    chat_messages: list[ChatMessage],
    reasoning: bool = False,
    history_mode: str = ROLLING_HISTORY,
) -> InitOutcome:
    """Zero-shot initialization: the proposed ranges become the working
    space (invalid proposals keep the declared fallback ranges) and the
    starting values are clamped into it."""
    incidents: list[Incident] = []
    mode = REASONING if reasoning else PLAIN
    system, user = build_init_messages(task, mode, history_mode=history_mode)
    if not chat_messages:
        chat_messages.append(system)
    convo = _Conversation(client, chat_messages)
    decision = convo.ask(
        user,
        lambda text: parse_init_decision(text, space=space, require_reason=reasoning),
        incidents,
    )
    new_space, report = apply_space_update(space, decision.param_ranges, best=None)
    for name, why in report.rejected.items():
        incidents.append(Incident("init_range_rejected", f"{name}: {why}"))
    params = _drop_extras(new_space, decision.initial_params, incidents)
    params = _fill_missing(new_space, params, incidents)
    assignment = _ensure_valid(new_space, params, incidents)
    return InitOutcome(space=new_space, assignment=assignment, reason=decision.reason, incidents=incidents)


def suggest_llm(
    task: TaskDescription,
    space: SearchSpace,
    client: ChatClient,
    chat_messages: list[ChatMessage],
    best_score: float,
    best_params: Params,
    mode: str = PLAIN,
    history_mode: str = ROLLING_HISTORY,
    first_trial: bool = False,
) -> SuggestOutcome:
    """One LLM-guided suggestion in the given prompt mode.

    Fully-LLM modes may also update the search space; the hybrid modes
    (tpe_relative / tpe_independent) only propose values, with omitted
    parameters repaired one by one through independent prompts.
    """
    if mode in (PLAIN, REASONING):
        return _suggest_full(task, space, client, chat_messages, best_score, best_params, mode, history_mode)
    return _suggest_hybrid_mode(
        task, space, client, chat_messages, best_score, best_params, mode, first_trial
    )


def _suggest_full(task, space, client, chat_messages, best_score, best_params, mode, history_mode):
    incidents: list[Incident] = []
    convo = _Conversation(client, chat_messages)
    messages = build_opt_messages(
        task, best_score, best_params, space, mode, history=[], history_mode=history_mode
    )
    decision = convo.ask(
        messages[-1],
        lambda text: _parse_full(text, space, require_reason=mode == REASONING),
        incidents,
    )
    current = space
    report: SpaceUpdateReport | None = None
    if decision.update_param_ranges and decision.new_param_ranges:
        current, report = apply_space_update(space, decision.new_param_ranges, best_params)
        for name, why in report.rejected.items():
            incidents.append(Incident("space_update_rejected", f"{name}: {why}"))
    params = _drop_extras(current, decision.next_params, incidents)
    params = _fill_missing(current, params, incidents)
    assignment = _ensure_valid(current, params, incidents)
    return SuggestOutcome(
        assignment=assignment, space=current, update_report=report,
        reason=decision.reason, incidents=incidents,
    )


def _parse_full(text: str, space: SearchSpace, require_reason: bool):
    decision = parse_opt_decision(text, space=space, require_reason=require_reason)
    missing = [name for name in space.params if name not in decision.next_params]
    if missing:
        raise SchemaError(f"'next_params' is missing keys {missing}")
    return decision


def _suggest_hybrid_mode(task, space, client, chat_messages, best_score, best_params, mode, first_trial):
    incidents: list[Incident] = []
    convo = _Conversation(client, chat_messages)
    params: Params = {}
    if mode == TPE_RELATIVE:
        user = _relative_prompt(task, space, best_score, best_params, first_trial)
        fragment = convo.ask(user, lambda text: parse_relative_fragment(text, space), incidents)
        params = dict(fragment.params)
        to_repair = fragment.missing
    else:
        to_repair = list(space.params)
    for name in to_repair:
        user = _independent_prompt(task, space, best_score, best_params, name, first_trial)
        value = convo.ask(
            user, lambda text, n=name: parse_independent_fragment(text, n, space), incidents
        )
        params[name] = value
    if mode == TPE_RELATIVE and to_repair:
        incidents.append(Incident("llm_repaired", f"independent repair for {to_repair}"))
    assignment = _ensure_valid(space, params, incidents)
    return SuggestOutcome(assignment=assignment, space=space, incidents=incidents)


def _relative_prompt(task, space, best_score, best_params, first_trial) -> ChatMessage:
    if first_trial:
        return build_init_messages(task, TPE_RELATIVE, space=space)[-1]
    return build_opt_messages(task, best_score, best_params, space, TPE_RELATIVE, history=[])[-1]


def _independent_prompt(task, space, best_score, best_params, name, first_trial) -> ChatMessage:
    if first_trial:
        return build_init_messages(task, TPE_INDEPENDENT, space=space, param_name=name)[-1]
    return build_opt_messages(
        task, best_score, best_params, space, TPE_INDEPENDENT, history=[], param_name=name
    )[-1]
