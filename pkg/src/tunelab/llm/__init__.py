from .client import (
    ChatClient,
    ChatMessage,
    CompletionResult,
    MockChatClient,
    ProviderConfig,
    build_client,
    estimate_tokens,
)

__all__ = [
    "ChatClient",
    "ChatMessage",
    "CompletionResult",
    "MockChatClient",
    "ProviderConfig",
    "build_client",
    "estimate_tokens",
]
