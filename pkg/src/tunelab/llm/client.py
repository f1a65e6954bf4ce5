"""Provider-agnostic chat-completion clients.

Real providers speak their HTTP dialects behind one ``complete`` contract
with bounded retries and exponential backoff; the scripted mock makes every
LLM-dependent behavior testable offline and deterministic. API keys are
read from named environment variables and never logged or persisted.
"""

from __future__ import annotations

import math
import os
import threading
import time
from dataclasses import dataclass
from typing import Callable, Sequence

import httpx

from ..errors import ConfigurationError, ProtocolError, TransportError

ROLES = ("system", "user", "assistant")

BACKOFF_BASE_SECONDS = 1.0


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str

    def __post_init__(self):
        if self.role not in ROLES:
            raise ConfigurationError(f"invalid role {self.role!r}")
        if self.content is None:
            raise ConfigurationError("message content must not be None")

    def to_dict(self) -> dict:
        return {"role": self.role, "content": self.content}


@dataclass
class ProviderConfig:
    provider: str = "mock"  # openai-compatible | anthropic-compatible | gemini-compatible | mock
    model: str = "mock-model"
    api_key_env: str = ""
    base_url: str = ""
    timeout: float = 60.0
    max_retries: int = 3
    temperature: float = 0.0

    def __post_init__(self):
        if self.timeout <= 0:
            raise ConfigurationError("timeout must be > 0")
        if self.max_retries < 0:
            raise ConfigurationError("max_retries must be >= 0")


@dataclass
class CompletionResult:
    text: str
    prompt_tokens: int
    completion_tokens: int
    latency: float


def estimate_tokens(messages: Sequence[ChatMessage] | str) -> int:
    """Character-count heuristic: ceil(total content chars / 4)."""
    if isinstance(messages, str):
        chars = len(messages)
    else:
        chars = sum(len(m.content) for m in messages)
    return math.ceil(chars / 4)


class TransientFailure(TransportError):
    """A failure worth retrying (timeouts, connection errors, 429/5xx)."""


class ChatClient:
    """Base class implementing the retry/backoff loop around ``_call_once``."""

    def __init__(self, cfg: ProviderConfig, sleeper: Callable[[float], None] = time.sleep):
        self.cfg = cfg
        self._sleep = sleeper

    def complete(self, messages: Sequence[ChatMessage]) -> CompletionResult:
        if not messages:
            raise ConfigurationError("messages must be non-empty")
        delay = BACKOFF_BASE_SECONDS
        last: Exception | None = None
        for attempt in range(self.cfg.max_retries + 1):
            if attempt:
                self._sleep(delay)
                delay *= 2
            start = time.perf_counter()
            try:
                text, prompt_tokens, completion_tokens = self._call_once(messages)
            except TransientFailure as exc:
                last = exc
                continue
            latency = time.perf_counter() - start
            if prompt_tokens is None:
                prompt_tokens = estimate_tokens(messages)
            if completion_tokens is None:
                completion_tokens = estimate_tokens(text)
            return CompletionResult(text, prompt_tokens, completion_tokens, latency)
        raise TransportError(f"retries exhausted after {self.cfg.max_retries + 1} attempts: {last}")

    def _call_once(self, messages: Sequence[ChatMessage]) -> tuple[str, int | None, int | None]:
        raise NotImplementedError


@dataclass
class MockFailure:
    """Script entry standing in for a provider failure."""

    kind: str = "transient"  # transient | protocol
    detail: str = "scripted failure"


class MockChatClient(ChatClient):
    """Deterministic scripted provider.

    Replies come from an ordered script (strings or :class:`MockFailure`
    entries), then from ``responder(messages)`` if given, then from
    ``default_reply``. Every received prompt is recorded for assertions.
    The script cursor is lock-protected, and backoff sleeps are recorded
    rather than slept so retry tests run instantly.
    """

    def __init__(
        self,
        script: Sequence[str | MockFailure] | None = None,
        default_reply: str | None = None,
        responder: Callable[[list[ChatMessage]], str] | None = None,
        cfg: ProviderConfig | None = None,
    ):
        cfg = cfg or ProviderConfig(provider="mock")
        self.sleeps: list[float] = []
        super().__init__(cfg, sleeper=self.sleeps.append)
        self.script = list(script or [])
        self.default_reply = default_reply
        self.responder = responder
        self.calls: list[list[ChatMessage]] = []
        self._cursor = 0
        self._lock = threading.Lock()

    def _call_once(self, messages: Sequence[ChatMessage]) -> tuple[str, int | None, int | None]:
        with self._lock:
            self.calls.append(list(messages))
            if self._cursor < len(self.script):
                entry = self.script[self._cursor]
                self._cursor += 1
            elif self.responder is not None:
                entry = self.responder(list(messages))
            elif self.default_reply is not None:
                entry = self.default_reply
            else:
                entry = MockFailure(detail="script exhausted")
        if isinstance(entry, MockFailure):
            if entry.kind == "transient":
                raise TransientFailure(entry.detail)
            raise ProtocolError(entry.detail)
        return entry, None, None


class _HttpChatClient(ChatClient):
    """Shared plumbing for the HTTP provider families."""

    def __init__(self, cfg: ProviderConfig, transport: httpx.BaseTransport | None = None):
        super().__init__(cfg)
        if not cfg.api_key_env:
            raise ConfigurationError(f"{cfg.provider}: api_key_env must be set")
        key = os.environ.get(cfg.api_key_env, "")
        if not key:
            raise ConfigurationError(
                f"{cfg.provider}: environment variable {cfg.api_key_env!r} is not set"
            )
        self._api_key = key
        self._http = httpx.Client(timeout=cfg.timeout, transport=transport)

    def _post(self, url: str, headers: dict, payload: dict) -> dict:
        try:
            response = self._http.post(url, headers=headers, json=payload)
        except httpx.HTTPError as exc:
            raise TransientFailure(str(exc)) from exc
        if response.status_code == 429 or response.status_code >= 500:
            raise TransientFailure(f"HTTP {response.status_code}")
        if response.status_code != 200:
            raise ProtocolError(f"HTTP {response.status_code}: {response.text[:200]}")
        try:
            return response.json()
        except ValueError as exc:
            raise ProtocolError(f"non-JSON payload: {exc}") from exc


class OpenAICompatClient(_HttpChatClient):
    DEFAULT_BASE_URL = "https://api.openai.com/v1"

    def _call_once(self, messages):
        base = self.cfg.base_url or self.DEFAULT_BASE_URL
        payload = {
            "model": self.cfg.model,
            "temperature": self.cfg.temperature,
            "messages": [m.to_dict() for m in messages],
        }
        data = self._post(
            f"{base}/chat/completions",
            {"Authorization": f"Bearer {self._api_key}"},
            payload,
        )
        try:
            text = data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise ProtocolError(f"unexpected completion shape: {exc}") from exc
        usage = data.get("usage") or {}
        return text, usage.get("prompt_tokens"), usage.get("completion_tokens")


class AnthropicCompatClient(_HttpChatClient):
    DEFAULT_BASE_URL = "https://api.anthropic.com"

    def _call_once(self, messages):
        base = self.cfg.base_url or self.DEFAULT_BASE_URL
        system = "\n".join(m.content for m in messages if m.role == "system")
        payload = {
            "model": self.cfg.model,
            "max_tokens": 4096,
            "temperature": self.cfg.temperature,
            "messages": [m.to_dict() for m in messages if m.role != "system"],
        }
        if system:
            payload["system"] = system
        data = self._post(
            f"{base}/v1/messages",
            {"x-api-key": self._api_key, "anthropic-version": "2023-06-01"},
            payload,
        )
        try:
            text = "".join(block["text"] for block in data["content"] if block["type"] == "text")
        except (KeyError, TypeError) as exc:
            raise ProtocolError(f"unexpected completion shape: {exc}") from exc
        usage = data.get("usage") or {}
        return text, usage.get("input_tokens"), usage.get("output_tokens")


class GeminiCompatClient(_HttpChatClient):
    DEFAULT_BASE_URL = "https://generativelanguage.googleapis.com/v1beta"

    def _call_once(self, messages):
        base = self.cfg.base_url or self.DEFAULT_BASE_URL
        system = "\n".join(m.content for m in messages if m.role == "system")
        contents = [
            {"role": "model" if m.role == "assistant" else "user", "parts": [{"text": m.content}]}
            for m in messages
            if m.role != "system"
        ]
        payload: dict = {
            "contents": contents,
            "generationConfig": {"temperature": self.cfg.temperature},
        }
        if system:
            payload["systemInstruction"] = {"parts": [{"text": system}]}
        data = self._post(
            f"{base}/models/{self.cfg.model}:generateContent",
            {"x-goog-api-key": self._api_key},
            payload,
        )
        try:
            parts = data["candidates"][0]["content"]["parts"]
            text = "".join(p.get("text", "") for p in parts)
        except (KeyError, IndexError, TypeError) as exc:
            raise ProtocolError(f"unexpected completion shape: {exc}") from exc
        usage = data.get("usageMetadata") or {}
        return text, usage.get("promptTokenCount"), usage.get("candidatesTokenCount")


_PROVIDERS = {
    "openai-compatible": OpenAICompatClient,
    "anthropic-compatible": AnthropicCompatClient,
    "gemini-compatible": GeminiCompatClient,
}


def build_client(
    cfg: ProviderConfig,
    script: Sequence[str | MockFailure] | None = None,
    default_reply: str | None = None,
) -> ChatClient:
    """Construct the client for a provider config.

    Missing API keys for real providers raise :class:`ConfigurationError`
    here, before any network traffic.
    """
    if cfg.provider == "mock":
        return MockChatClient(script=script, default_reply=default_reply, cfg=cfg)
    try:
        return _PROVIDERS[cfg.provider](cfg)
    except KeyError:
        raise ConfigurationError(f"unknown provider {cfg.provider!r}") from None
