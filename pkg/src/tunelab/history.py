"""Trial ledger and chat-history management.

The ledger is append-only JSON lines, one trial per line, flushed as
written so a killed run loses at most the in-flight trial. Chat history
grows with the conversation and is condensed either by an LLM-written
summary (forced to retain the best score and parameters) or by a rolling
buffer that keeps the system message plus the most recent messages.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Sequence

from .errors import ConfigurationError, ParseError, SchemaError, TransportError
from .llm.client import ChatClient, ChatMessage, estimate_tokens
from .llm.prompts import build_summarize_messages
from .llm.parsing import parse_summary_messages
from .space import Params

log = logging.getLogger("tunelab.history")

INTELLIGENT_SUMMARY = "intelligent_summary"
ROLLING_BUFFER = "rolling_buffer"

LEDGER_FIELDS = ("iteration", "params", "score", "source", "space_version", "reason", "timestamp")


@dataclass
class TrialRecord:
    iteration: int
    params: Params
    score: float
    source: str  # llm | tpe | random | init_llm | init_random
    space_version: int
    reason: str | None = None
    timestamp: str | None = None

    def to_line(self) -> str:
        payload = {name: getattr(self, name) for name in LEDGER_FIELDS}
        return json.dumps(payload)

    @classmethod
    def from_line(cls, line: str) -> "TrialRecord":
        payload = json.loads(line)
        return cls(
            iteration=int(payload["iteration"]),
            params=dict(payload["params"]),
            score=float(payload["score"]),
            source=str(payload["source"]),
            space_version=int(payload["space_version"]),
            reason=payload.get("reason"),
            timestamp=payload.get("timestamp"),
        )


def now_timestamp() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


class LedgerWriter:
    """Incremental JSONL writer, one flushed line per trial."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.path, "w", encoding="utf-8")

    def write(self, record: TrialRecord) -> None:
        self._fh.write(record.to_line() + "\n")
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_ledger(path: str | Path) -> tuple[list[TrialRecord], int]:
    """Parse a ledger file, skipping corrupt lines with a warning.

    Returns the records plus the number of lines skipped.
    """
    records: list[TrialRecord] = []
    skipped = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                records.append(TrialRecord.from_line(line))
            except (ValueError, KeyError, TypeError) as exc:
                skipped += 1
                log.warning("skipping corrupt ledger line %d: %s", lineno, exc)
    return records, skipped


def export_csv(records: Sequence[TrialRecord], path: str | Path) -> None:
    """Flat CSV export with params spread into name-prefixed columns."""
    param_names: list[str] = []
    for record in records:
        for name in record.params:
            if name not in param_names:
                param_names.append(name)
    header = ["iteration", *[f"param_{n}" for n in param_names],
              "score", "source", "space_version", "reason", "timestamp"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for record in records:
            writer.writerow(
                [record.iteration, *[record.params.get(n, "") for n in param_names],
                 record.score, record.source, record.space_version,
                 record.reason or "", record.timestamp or ""]
            )


@dataclass
class HistoryPolicy:
    mode: str = ROLLING_BUFFER
    summarize_every: int = 10
    token_limit: int = 8000
    buffer_keep: int = 20

    def __post_init__(self):
        if self.mode not in (INTELLIGENT_SUMMARY, ROLLING_BUFFER):
            raise ConfigurationError(f"unknown history mode {self.mode!r}")
        if self.summarize_every < 1:
            raise ConfigurationError("summarize_every must be >= 1")
        if self.token_limit <= 0:
            raise ConfigurationError("token_limit must be > 0")
        if self.buffer_keep < 2:
            raise ConfigurationError("buffer_keep must be >= 2")


@dataclass
class ChatHistory:
    """Ordered conversation plus the iteration of the last summarization."""

    messages: list[ChatMessage] = field(default_factory=list)
    summary_watermark: int = 0

    def append(self, message: ChatMessage) -> None:
        self.messages.append(message)

    def text(self) -> str:
        return "\n".join(m.content for m in self.messages)


def should_summarize(policy: HistoryPolicy, iteration: int, chat: ChatHistory) -> bool:
    """True on every summarize_every-th iteration, or when the estimated
    token count exceeds the limit."""
    if policy.mode != INTELLIGENT_SUMMARY:
        return False
    if iteration > 0 and iteration % policy.summarize_every == 0:
        return True
    return estimate_tokens(chat.messages) > policy.token_limit


def best_anchor_message(best_score: float, best_params: Params) -> ChatMessage:
    from .llm.prompts import fmt_params

    content = f"Best score so far: {best_score}\nBest parameters so far: {fmt_params(best_params)}"
    return ChatMessage("user", content)


def _contains_best(text: str, best_score: float, best_params: Params) -> bool:
    from .llm.prompts import fmt_value

    if str(best_score) not in text:
        return False
    return all(str(fmt_value(v)) in text for v in best_params.values())


def summarize(
    client: ChatClient,
    chat: ChatHistory,
    best_score: float,
    best_params: Params,
    iteration: int = 0,
) -> ChatHistory:
    """Replace everything after the system message with an LLM-written
    summary, then append the best score/params verbatim if the summary
    omitted them. Any failure leaves the history unchanged."""
    try:
        result = client.complete(build_summarize_messages(chat.messages))
        summary = parse_summary_messages(result.text)
    except (TransportError, ParseError, SchemaError) as exc:
        log.warning("summarization failed, history kept: %s", exc)
        return chat
    system = [m for m in chat.messages[:1] if m.role == "system"]
    messages = system + [ChatMessage(m["role"], m["content"]) for m in summary]
    if not _contains_best("\n".join(m.content for m in messages), best_score, best_params):
        messages.append(best_anchor_message(best_score, best_params))
    return ChatHistory(messages=messages, summary_watermark=iteration)


def rolling_trim(policy: HistoryPolicy, chat: ChatHistory) -> ChatHistory:
    """Keep the system message plus the most recent buffer_keep messages."""
    messages = chat.messages
    has_system = bool(messages) and messages[0].role == "system"
    head = messages[:1] if has_system else []
    tail = messages[len(head):]
    if len(tail) > policy.buffer_keep:
        tail = tail[-policy.buffer_keep:]
    return ChatHistory(messages=head + tail, summary_watermark=chat.summary_watermark)
