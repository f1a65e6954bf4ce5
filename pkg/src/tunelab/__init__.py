"""Black-box hyperparameter optimization with TPE, LLM-guided, and hybrid
LLM-TPE samplers, adaptive search spaces, history summarization, and early
stopping."""

from .history import ChatHistory, HistoryPolicy, TrialRecord, read_ledger
from .hybrid import HybridConfig, suggest_hybrid, warm_start
from .llm.client import ChatMessage, MockChatClient, ProviderConfig, build_client, estimate_tokens
from .llm.prompts import TaskDescription, build_init_messages, build_opt_messages
from .objectives import ObjectiveSpec, default_space, evaluate
from .space import (
    ParamSpec,
    SearchSpace,
    apply_space_update,
    clamp_assignment,
    uniform_assignment,
    validate_assignment,
)
from .study import StudyConfig, StudyResult, run_study
from .tpe import ObservationSet, fit_density, split_observations, suggest_tpe

__version__ = "0.1.0"

__all__ = [
    "ChatHistory",
    "ChatMessage",
    "HistoryPolicy",
    "HybridConfig",
    "MockChatClient",
    "ObjectiveSpec",
    "ObservationSet",
    "ParamSpec",
    "ProviderConfig",
    "SearchSpace",
    "StudyConfig",
    "StudyResult",
    "TaskDescription",
    "TrialRecord",
    "apply_space_update",
    "build_client",
    "build_init_messages",
    "build_opt_messages",
    "clamp_assignment",
    "default_space",
    "estimate_tokens",
    "evaluate",
    "fit_density",
    "read_ledger",
    "run_study",
    "split_observations",
    "suggest_hybrid",
    "suggest_tpe",
    "uniform_assignment",
    "validate_assignment",
    "warm_start",
]
