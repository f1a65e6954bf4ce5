"""Exception hierarchy shared across the package."""


class TunelabError(Exception):
    """Base class for all package errors."""


class ConfigurationError(TunelabError):
    """Invalid or incomplete configuration, detected before any work starts."""


class TemplateError(TunelabError):
    """A prompt template was rendered with a missing placeholder value."""

    def __init__(self, placeholder: str):
        self.placeholder = placeholder
        super().__init__(f"missing value for placeholder {placeholder!r}")


class TransportError(TunelabError):
    """All retries against a chat provider were exhausted."""


class ProtocolError(TunelabError):
    """A provider returned a payload that does not match its wire format."""


class ParseError(TunelabError):
    """No structured object could be extracted from an LLM reply (retryable)."""


class SchemaError(TunelabError):
    """An extracted object is missing required keys (retryable)."""


class SamplerError(TunelabError):
    """An LLM sampler exhausted its retries; the caller decides the fallback."""


class EvaluatorError(TunelabError):
    """An objective evaluation failed (timeout, bad exit, unparseable output)."""
