"""Declarative run/matrix configuration: the published schema.

One document gathers the ~25 knobs of a study (task, space, sampler,
study, history, objective, output) so runs are diffable and reproducible.
Unknown keys are rejected with the offending path named; the same models
back the service request bodies and the config files the CLI loads.
"""

from __future__ import annotations

import shlex
from typing import Literal

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .errors import ConfigurationError
from .history import HistoryPolicy
from .hybrid import HybridConfig
from .llm.client import ChatClient, MockChatClient, ProviderConfig, build_client
from .llm.prompts import TaskDescription
from .objectives import ObjectiveSpec
from .space import ParamSpec, SearchSpace
from .study import StudyConfig, TpeSettings


class _Block(BaseModel):
    model_config = ConfigDict(extra="forbid", protected_namespaces=())


class TaskBlock(_Block):
    model_name: str = Field(min_length=1)
    problem_description: str = Field(min_length=1)
    metric: str = Field(min_length=1)
    direction: Literal["minimize", "maximize"] = "minimize"


class ParamBlock(_Block):
    name: str = Field(min_length=1)
    kind: Literal["continuous", "integer", "categorical"]
    low: float | None = None
    high: float | None = None
    choices: list[str] | None = None
    log_scale: bool = False

    def to_spec(self) -> ParamSpec:
        return ParamSpec(
            name=self.name, kind=self.kind, low=self.low, high=self.high,
            choices=self.choices, log_scale=self.log_scale,
        )


class SearchSpaceBlock(_Block):
    params: list[ParamBlock] = Field(min_length=1)

    def to_space(self) -> SearchSpace:
        return SearchSpace.of(*[p.to_spec() for p in self.params])


class TpeBlock(_Block):
    gamma: float = Field(default=0.25, gt=0.0, lt=1.0)
    n_candidates: int = Field(default=24, ge=1)


class LlmBlock(_Block):
    reasoning: bool = False


class HybridBlock(_Block):
    llm_probability: float = Field(default=0.5, ge=0.0, le=1.0)
    init_mode: Literal["llm_init", "random_init"] = "llm_init"
    llm_mode: Literal["tpe_relative", "tpe_independent"] = "tpe_relative"


class ProviderBlock(_Block):
    provider: Literal["openai-compatible", "anthropic-compatible", "gemini-compatible", "mock"] = "mock"
    model: str = "mock-model"
    api_key_env: str = ""
    base_url: str = ""
    timeout: float = Field(default=60.0, gt=0)
    max_retries: int = Field(default=3, ge=0)
    temperature: float = 0.0
    # mock-only scripting so offline configs stay deterministic
    replies: list[str] = Field(default_factory=list)
    default_reply: str | None = None

    def to_provider_config(self) -> ProviderConfig:
        return ProviderConfig(
            provider=self.provider, model=self.model, api_key_env=self.api_key_env,
            base_url=self.base_url, timeout=self.timeout,
            max_retries=self.max_retries, temperature=self.temperature,
        )

    def build(self) -> ChatClient:
        if self.provider == "mock":
            return MockChatClient(
                script=list(self.replies),
                default_reply=self.default_reply,
                cfg=self.to_provider_config(),
            )
        return build_client(self.to_provider_config())


class SamplerBlock(_Block):
    kind: Literal["tpe_only", "llm_only", "hybrid", "random"] = "tpe_only"
    tpe: TpeBlock = Field(default_factory=TpeBlock)
    llm: LlmBlock = Field(default_factory=LlmBlock)
    hybrid: HybridBlock = Field(default_factory=HybridBlock)
    provider: ProviderBlock = Field(default_factory=ProviderBlock)


class NamedSamplerBlock(SamplerBlock):
    name: str = Field(min_length=1)


class StudyBlock(_Block):
    max_iterations: int = Field(default=50, ge=1)
    patience: int | None = Field(default=None, ge=1)
    min_delta: float = Field(default=0.0, ge=0.0)
    seed: int = 42
    # optional restatement of task.direction; must agree when present
    direction: Literal["minimize", "maximize"] | None = None
    timestamp_mode: Literal["wall", "none"] = "wall"


class HistoryBlock(_Block):
    mode: Literal["intelligent_summary", "rolling_buffer"] = "rolling_buffer"
    summarize_every: int = Field(default=10, ge=1)
    token_limit: int = Field(default=8000, gt=0)
    buffer_keep: int = Field(default=20, ge=2)

    def to_policy(self) -> HistoryPolicy:
        return HistoryPolicy(
            mode=self.mode, summarize_every=self.summarize_every,
            token_limit=self.token_limit, buffer_keep=self.buffer_keep,
        )


class ObjectiveBlock(_Block):
    kind: Literal["builtin", "external"] = "builtin"
    name: Literal["branin", "rosenbrock", "sphere", "discrete_grid"] = "sphere"
    command: str | list[str] | None = None
    cwd: str | None = None
    timeout: float = Field(default=60.0, gt=0)

    @model_validator(mode="after")
    def _check_external(self):
        if self.kind == "external" and not self.command:
            raise ValueError("external objectives need a command")
        return self

    def to_objective(self) -> ObjectiveSpec:
        command = self.command
        if isinstance(command, str):
            command = shlex.split(command)
        return ObjectiveSpec(
            kind=self.kind, name=self.name, command=command, cwd=self.cwd, timeout=self.timeout
        )

    def label(self) -> str:
        if self.kind == "builtin":
            return self.name
        return "external"


class OutputBlock(_Block):
    dir: str | None = None


class RunConfig(_Block):
    task: TaskBlock
    search_space: SearchSpaceBlock
    sampler: SamplerBlock = Field(default_factory=SamplerBlock)
    study: StudyBlock = Field(default_factory=StudyBlock)
    history: HistoryBlock = Field(default_factory=HistoryBlock)
    objective: ObjectiveBlock = Field(default_factory=ObjectiveBlock)
    output: OutputBlock = Field(default_factory=OutputBlock)

    @model_validator(mode="after")
    def _directions_agree(self):
        if self.study.direction is not None and self.study.direction != self.task.direction:
            raise ValueError(
                f"study.direction={self.study.direction!r} contradicts task.direction={self.task.direction!r}"
            )
        return self

    def to_study_config(self, sampler: SamplerBlock | None = None) -> StudyConfig:
        sampler = sampler or self.sampler
        task = TaskDescription(
            model_name=self.task.model_name,
            problem_description=self.task.problem_description,
            metric=self.task.metric,
            direction=self.task.direction,
        )
        return StudyConfig(
            task=task,
            space=self.search_space.to_space(),
            objective=self.objective.to_objective(),
            sampler=sampler.kind,
            direction=self.task.direction,
            max_iterations=self.study.max_iterations,
            patience=self.study.patience,
            min_delta=self.study.min_delta,
            seed=self.study.seed,
            tpe=TpeSettings(gamma=sampler.tpe.gamma, n_candidates=sampler.tpe.n_candidates),
            hybrid=HybridConfig(
                llm_probability=sampler.hybrid.llm_probability,
                init_mode=sampler.hybrid.init_mode,
                llm_mode=sampler.hybrid.llm_mode,
            ),
            history=self.history.to_policy(),
            provider=sampler.provider.to_provider_config(),
            llm_reasoning=sampler.llm.reasoning,
            timestamp_mode=self.study.timestamp_mode,
        )


class MatrixConfig(_Block):
    task: TaskBlock
    search_space: SearchSpaceBlock
    samplers: list[NamedSamplerBlock] = Field(min_length=1)
    objectives: list[ObjectiveBlock] = Field(min_length=1)
    study: StudyBlock = Field(default_factory=StudyBlock)
    history: HistoryBlock = Field(default_factory=HistoryBlock)
    repeats: int = Field(default=1, ge=1)
    workers: int = Field(default=1, ge=1)
    output: OutputBlock = Field(default_factory=OutputBlock)

    @model_validator(mode="after")
    def _directions_agree(self):
        if self.study.direction is not None and self.study.direction != self.task.direction:
            raise ValueError(
                f"study.direction={self.study.direction!r} contradicts task.direction={self.task.direction!r}"
            )
        return self


def load_document(path: str) -> dict:
    """YAML (and therefore JSON) config document from disk."""
    with open(path, encoding="utf-8") as fh:
        doc = yaml.safe_load(fh)
    if not isinstance(doc, dict):
        raise ConfigurationError(f"{path}: config must be a mapping")
    return doc


def apply_overrides(doc: dict, overrides: list[str]) -> dict:
    """Apply ``dotted.path=value`` overrides; values parse as YAML scalars."""
    for item in overrides:
        if "=" not in item:
            raise ConfigurationError(f"override {item!r} must look like key.path=value")
        key, raw = item.split("=", 1)
        value = yaml.safe_load(raw)
        node = doc
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigurationError(f"override {key!r} crosses a non-mapping node")
        node[parts[-1]] = value
    return doc


def format_validation_error(exc: ValidationError) -> str:
    lines = []
    for err in exc.errors():
        path = ".".join(str(p) for p in err["loc"]) or "<root>"
        lines.append(f"{path}: {err['msg']}")
    return "; ".join(lines)
