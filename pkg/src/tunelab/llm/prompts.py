"""Prompt construction from the versioned template assets.

Templates live as text files next to this module so tests can diff them
against golden copies; rendering is pure placeholder substitution, nothing
is added or reordered. Which template a mode uses:

========================  ==============================  ============================
mode                      system template                 user template
========================  ==============================  ============================
plain + summary history   system_fully_llm_summary        init_fully_llm / opt_..._summary
plain + rolling history   system_fully_llm_rolling        init_fully_llm / opt_..._rolling
reasoning                 system_fully_llm_reasoning      init_fully_llm / opt_..._reasoning
tpe_relative              system_hybrid                   init/opt_hybrid_relative
tpe_independent           system_hybrid                   init/opt_hybrid_independent
========================  ==============================  ============================
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from typing import Any, Mapping, Sequence

from ..errors import ConfigurationError, TemplateError
from ..space import SearchSpace
from .client import ChatMessage

PLAIN = "plain"
REASONING = "reasoning"
TPE_RELATIVE = "tpe_relative"
TPE_INDEPENDENT = "tpe_independent"

MODES = (PLAIN, REASONING, TPE_RELATIVE, TPE_INDEPENDENT)

SUMMARY_HISTORY = "intelligent_summary"
ROLLING_HISTORY = "rolling_buffer"


@dataclass
class TaskDescription:
    """What is being tuned, for whom, and in which direction."""

    model_name: str
    problem_description: str
    metric: str
    direction: str

    def __post_init__(self):
        for name in ("model_name", "problem_description", "metric", "direction"):
            if not getattr(self, name):
                raise ConfigurationError(f"task.{name} must be non-empty")
        if self.direction not in ("minimize", "maximize"):
            raise ConfigurationError("direction must be minimize or maximize")


def load_template(name: str) -> str:
    return resources.files("tunelab.llm").joinpath(f"templates/{name}.txt").read_text()


class _StrictMap(dict):
    def __missing__(self, key):
        raise TemplateError(key)


def render(template_name: str, values: Mapping[str, Any]) -> str:
    """Substitute placeholders; a missing value raises naming the placeholder."""
    return load_template(template_name).format_map(_StrictMap(values))


def fmt_value(value: Any) -> Any:
    """Whole floats render as ints so ranges read like [0, 1], not [0.0, 1.0]."""
    if isinstance(value, float) and value.is_integer():
        return int(value)
    return value


def fmt_params(params: Mapping[str, Any]) -> str:
    return repr({k: fmt_value(v) for k, v in params.items()})


def fmt_ranges(space: SearchSpace) -> str:
    wire = space.param_ranges_wire()
    return repr({k: [fmt_value(v) for v in vals] for k, vals in wire.items()})


def fmt_range(bounds: Sequence[Any]) -> str:
    return repr([fmt_value(v) for v in bounds])


def _task_values(task: TaskDescription) -> dict:
    return {
        "model_name": task.model_name,
        "problem_description": task.problem_description,
        "metric": task.metric,
        "direction": task.direction,
    }


def system_message(task: TaskDescription, mode: str, history_mode: str = ROLLING_HISTORY) -> ChatMessage:
    if mode in (TPE_RELATIVE, TPE_INDEPENDENT):
        name = "system_hybrid"
    elif mode == REASONING:
        name = "system_fully_llm_reasoning"
    elif history_mode == SUMMARY_HISTORY:
        name = "system_fully_llm_summary"
    else:
        name = "system_fully_llm_rolling"
    return ChatMessage("system", render(name, _task_values(task)))


def build_init_messages(
    task: TaskDescription,
    mode: str,
    space: SearchSpace | None = None,
    param_name: str | None = None,
    history_mode: str = ROLLING_HISTORY,
) -> list[ChatMessage]:
    """Fresh [system, user] conversation for the initialization call."""
    if mode not in MODES:
        raise ConfigurationError(f"unknown prompt mode {mode!r}")
    system = system_message(task, mode, history_mode)
    if mode in (PLAIN, REASONING):
        user = render("init_fully_llm", {})
    elif mode == TPE_RELATIVE:
        if space is None:
            raise ConfigurationError("tpe_relative init needs the search space")
        user = render(
            "init_hybrid_relative",
            {
                "search_space_dict": fmt_ranges(space),
                "integer_params": ", ".join(space.integer_names()),
            },
        )
    else:
        if space is None or param_name is None:
            raise ConfigurationError("tpe_independent init needs the space and a parameter name")
        user = render(
            "init_hybrid_independent",
            {
                "param_name": param_name,
                "param_range": fmt_range(space.param_ranges_wire()[param_name]),
            },
        )
    return [system, ChatMessage("user", user)]


def build_opt_messages(
    task: TaskDescription,
    best_score: float,
    best_params: Mapping[str, Any],
    space: SearchSpace,
    mode: str,
    history: Sequence[ChatMessage],
    param_name: str | None = None,
    history_mode: str = ROLLING_HISTORY,
) -> list[ChatMessage]:
    """Prior conversation plus the optimization prompt for this iteration."""
    if mode not in MODES:
        raise ConfigurationError(f"unknown prompt mode {mode!r}")
    values = {
        **_task_values(task),
        "best_score": best_score,
        "best_params": fmt_params(best_params),
        "current_ranges": fmt_ranges(space),
    }
    if mode == PLAIN:
        name = "opt_fully_llm_summary" if history_mode == SUMMARY_HISTORY else "opt_fully_llm_rolling"
        user = render(name, values)
    elif mode == REASONING:
        user = render("opt_fully_llm_reasoning", values)
    elif mode == TPE_RELATIVE:
        values["search_space_dict"] = fmt_ranges(space)
        values["integer_params"] = ", ".join(space.integer_names())
        user = render("opt_hybrid_relative", values)
    else:
        if param_name is None:
            raise ConfigurationError("tpe_independent opt needs a parameter name")
        values["param_name"] = param_name
        values["param_range"] = fmt_range(space.param_ranges_wire()[param_name])
        user = render("opt_hybrid_independent", values)
    return [*history, ChatMessage("user", user)]


def build_summarize_messages(history: Sequence[ChatMessage]) -> list[ChatMessage]:
    """Standalone summarization request over the serialized conversation."""
    import json

    serialized = json.dumps([m.to_dict() for m in history])
    user = render("summarize_history", {"conversation_history": serialized})
    return [ChatMessage("user", user)]
