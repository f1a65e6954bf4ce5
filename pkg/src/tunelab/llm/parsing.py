"""Parsing of LLM replies into typed decisions.

Replies are prose-tolerant: the first balanced JSON object in the text is
taken, whether bare, fenced, or wrapped in chatter. Parse and schema
problems raise distinct retryable errors so the sampler can send one
corrective message instead of giving up.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping

from ..errors import ParseError, SchemaError
from ..jsonutil import first_json_object
from ..space import CATEGORICAL, SearchSpace

INIT = "init"
OPT = "opt"
RELATIVE = "relative"
INDEPENDENT = "independent"


@dataclass
class InitDecision:
    """Reply to the initialization prompt: proposed ranges plus start values."""

    param_ranges: dict[str, list]
    initial_params: dict[str, Any]
    reason: str | None = None

    def to_payload(self) -> dict:
        out: dict[str, Any] = {
            "param_ranges": self.param_ranges,
            "initial_params": self.initial_params,
        }
        if self.reason is not None:
            out["reason"] = self.reason
        return out


@dataclass
class LLMDecision:
    """Reply to an optimization prompt: next values and an optional update."""

    update_param_ranges: bool
    next_params: dict[str, Any]
    new_param_ranges: dict[str, list] | None = None
    reason: str | None = None

    def to_payload(self) -> dict:
        out: dict[str, Any] = {
            "update_param_ranges": self.update_param_ranges,
            "next_params": self.next_params,
        }
        if self.new_param_ranges is not None:
            out["new_param_ranges"] = self.new_param_ranges
        if self.reason is not None:
            out["reason"] = self.reason
        return out


@dataclass
class RelativeFragment:
    """Flat param -> value suggestions; missing names are repaired per-parameter."""

    params: dict[str, Any]
    missing: list[str] = field(default_factory=list)


def _coerce_value(value: Any, space: SearchSpace | None, name: str) -> Any:
    """Numeric strings become numbers; categorical values become strings."""
    spec = space.params.get(name) if space is not None else None
    if spec is not None and spec.kind == CATEGORICAL:
        return value if isinstance(value, str) else str(value)
    if isinstance(value, str):
        try:
            return float(value) if "." in value or "e" in value.lower() else int(value)
        except ValueError:
            return value
    return value


def _coerce_params(params: Mapping[str, Any], space: SearchSpace | None) -> dict[str, Any]:
    return {name: _coerce_value(value, space, name) for name, value in params.items()}


def extract_object(text: str) -> dict:
    obj = first_json_object(text)
    if obj is None:
        raise ParseError("no JSON object found in reply")
    return obj


def parse_init_decision(
    text: str, space: SearchSpace | None = None, require_reason: bool = False
) -> InitDecision:
    obj = extract_object(text)
    if "param_ranges" not in obj or "initial_params" not in obj:
        raise SchemaError("reply must carry 'param_ranges' and 'initial_params'")
    ranges = obj["param_ranges"]
    initial = obj["initial_params"]
    if not isinstance(ranges, dict) or not isinstance(initial, dict):
        raise SchemaError("'param_ranges' and 'initial_params' must be objects")
    reason = obj.get("reason")
    if require_reason and not (isinstance(reason, str) and reason.strip()):
        raise SchemaError("reply must carry a non-empty 'reason'")
    return InitDecision(
        param_ranges=dict(ranges),
        initial_params=_coerce_params(initial, space),
        reason=reason if isinstance(reason, str) else None,
    )


def parse_opt_decision(
    text: str, space: SearchSpace | None = None, require_reason: bool = False
) -> LLMDecision:
    obj = extract_object(text)
    if "update_param_ranges" not in obj or "next_params" not in obj:
        raise SchemaError("reply must carry 'update_param_ranges' and 'next_params'")
    update = obj["update_param_ranges"]
    if isinstance(update, str):
        update = update.strip().lower() == "true"
    update = bool(update)
    next_params = obj["next_params"]
    if not isinstance(next_params, dict):
        raise SchemaError("'next_params' must be an object")
    new_ranges = obj.get("new_param_ranges")
    if update:
        if not isinstance(new_ranges, dict) or not new_ranges:
            raise SchemaError("'new_param_ranges' required when update_param_ranges is true")
    reason = obj.get("reason")
    if require_reason and not (isinstance(reason, str) and reason.strip()):
        raise SchemaError("reply must carry a non-empty 'reason'")
    return LLMDecision(
        update_param_ranges=update,
        next_params=_coerce_params(next_params, space),
        new_param_ranges=dict(new_ranges) if update else None,
        reason=reason if isinstance(reason, str) else None,
    )


def parse_relative_fragment(text: str, space: SearchSpace) -> RelativeFragment:
    obj = extract_object(text)
    known = {
        name: _coerce_value(value, space, name) for name, value in obj.items() if name in space.params
    }
    if not known:
        raise SchemaError("reply carries none of the space's parameter names")
    missing = [name for name in space.params if name not in known]
    return RelativeFragment(params=known, missing=missing)


def parse_independent_fragment(text: str, param_name: str, space: SearchSpace | None = None) -> Any:
    obj = extract_object(text)
    if param_name not in obj:
        raise SchemaError(f"key {param_name!r} absent from reply")
    return _coerce_value(obj[param_name], space, param_name)


def parse_summary_messages(text: str) -> list[dict]:
    """The summarization reply: a JSON array of role/content message objects."""
    from ..jsonutil import first_json_array

    arr = first_json_array(text)
    if arr is None:
        raise ParseError("no JSON array found in summary reply")
    messages = []
    for item in arr:
        if not isinstance(item, dict) or "role" not in item or "content" not in item:
            raise SchemaError("summary entries need 'role' and 'content' keys")
        if item["role"] not in ("system", "user", "assistant"):
            raise SchemaError(f"invalid summary role {item['role']!r}")
        messages.append({"role": item["role"], "content": str(item["content"])})
    return messages
