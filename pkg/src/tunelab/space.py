"""Search-space definition, validation, clamping, and adaptive updates.

A space is an ordered set of named parameter specs (continuous, integer,
or categorical). Samplers draw assignments from it; the LLM may propose
range updates between iterations, which are applied here under the rule
that the current best assignment must stay representable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping

from .errors import ConfigurationError

CONTINUOUS = "continuous"
INTEGER = "integer"
CATEGORICAL = "categorical"

KINDS = (CONTINUOUS, INTEGER, CATEGORICAL)

# An assignment maps parameter names to a float, int, or choice string.
Params = dict[str, Any]


@dataclass
class ParamSpec:
    """One tunable parameter: its kind and admissible values."""

    name: str
    kind: str
    low: float | None = None
    high: float | None = None
    choices: list[str] | None = None
    log_scale: bool = False

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if not self.name:
            raise ConfigurationError("parameter name must be non-empty")
        if self.kind not in KINDS:
            raise ConfigurationError(f"{self.name}: unknown kind {self.kind!r}")
        if self.kind == CATEGORICAL:
            if not self.choices:
                raise ConfigurationError(f"{self.name}: choices must be non-empty")
            if len(set(self.choices)) != len(self.choices):
                raise ConfigurationError(f"{self.name}: choices must be distinct")
            if self.log_scale:
                raise ConfigurationError(f"{self.name}: log_scale is numeric-only")
            return
        if self.low is None or self.high is None:
            raise ConfigurationError(f"{self.name}: numeric kinds need low and high")
        low, high = float(self.low), float(self.high)
        if not (math.isfinite(low) and math.isfinite(high)):
            raise ConfigurationError(f"{self.name}: bounds must be finite")
        if low >= high:
            raise ConfigurationError(f"{self.name}: low must be < high")
        if self.log_scale and low <= 0:
            raise ConfigurationError(f"{self.name}: log_scale needs low > 0")
        if self.kind == INTEGER:
            if low != int(low) or high != int(high):
                raise ConfigurationError(f"{self.name}: integer bounds must be whole")
            if high - low < 1:
                raise ConfigurationError(f"{self.name}: integer range needs high - low >= 1")

    def contains(self, value: Any) -> bool:
        if self.kind == CATEGORICAL:
            return isinstance(value, str) and value in self.choices
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            return False
        if not math.isfinite(float(value)):
            return False
        if self.kind == INTEGER and float(value) != int(value):
            return False
        return self.low <= float(value) <= self.high

    def to_dict(self) -> dict:
        out: dict[str, Any] = {"name": self.name, "kind": self.kind}
        if self.kind == CATEGORICAL:
            out["choices"] = list(self.choices)
        else:
            out["low"] = self.low
            out["high"] = self.high
            out["log_scale"] = self.log_scale
        return out

    @classmethod
    def from_dict(cls, d: Mapping) -> "ParamSpec":
        return cls(
            name=d["name"],
            kind=d["kind"],
            low=d.get("low"),
            high=d.get("high"),
            choices=list(d["choices"]) if d.get("choices") is not None else None,
            log_scale=bool(d.get("log_scale", False)),
        )


@dataclass
class SearchSpace:
    """Ordered name -> ParamSpec map with a version bumped on each update."""

    params: dict[str, ParamSpec] = field(default_factory=dict)
    version: int = 0

    @classmethod
    def of(cls, *specs: ParamSpec) -> "SearchSpace":
        space = cls()
        for spec in specs:
            if spec.name in space.params:
                raise ConfigurationError(f"duplicate parameter {spec.name!r}")
            space.params[spec.name] = spec
        if not space.params:
            raise ConfigurationError("search space must not be empty")
        return space

    def names(self) -> list[str]:
        return list(self.params)

    def integer_names(self) -> list[str]:
        return [n for n, s in self.params.items() if s.kind == INTEGER]

    def copy(self) -> "SearchSpace":
        return SearchSpace(
            params={n: ParamSpec.from_dict(s.to_dict()) for n, s in self.params.items()},
            version=self.version,
        )

    def to_dict(self) -> dict:
        return {"version": self.version, "params": [s.to_dict() for s in self.params.values()]}

    @classmethod
    def from_dict(cls, d: Mapping) -> "SearchSpace":
        space = cls.of(*[ParamSpec.from_dict(p) for p in d["params"]])
        space.version = int(d.get("version", 0))
        return space

    def param_ranges_wire(self) -> dict:
        """The ``param_ranges`` object used on the prompt wire: name ->
        [low, high] for numeric parameters, list of choices otherwise."""
        out: dict[str, list] = {}
        for name, spec in self.params.items():
            if spec.kind == CATEGORICAL:
                out[name] = list(spec.choices)
            else:
                out[name] = [spec.low, spec.high]
        return out


@dataclass
class Violation:
    kind: str  # missing_key | extra_key | out_of_range | wrong_kind
    name: str
    message: str


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def kinds(self) -> set[str]:
        return {v.kind for v in self.violations}


def validate_assignment(space: SearchSpace, assignment: Params) -> ValidationReport:
    """Check an assignment against the space. Violations are data, never raises."""
    report = ValidationReport()
    for name in space.params:
        if name not in assignment:
            report.violations.append(Violation("missing_key", name, f"{name} is missing"))
    for name, value in assignment.items():
        spec = space.params.get(name)
        if spec is None:
            report.violations.append(Violation("extra_key", name, f"{name} is not in the space"))
            continue
        if spec.kind == CATEGORICAL:
            if not isinstance(value, str):
                report.violations.append(
                    Violation("wrong_kind", name, f"{name} expects a choice string")
                )
            elif value not in spec.choices:
                report.violations.append(
                    Violation("out_of_range", name, f"{name}={value!r} not in choices")
                )
            continue
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            report.violations.append(Violation("wrong_kind", name, f"{name} expects a number"))
            continue
        if not math.isfinite(float(value)) or spec.kind == INTEGER and float(value) != int(value):
            report.violations.append(
                Violation("wrong_kind", name, f"{name}={value!r} is not a valid {spec.kind}")
            )
            continue
        if not (spec.low <= float(value) <= spec.high):
            report.violations.append(
                Violation("out_of_range", name, f"{name}={value!r} outside [{spec.low}, {spec.high}]")
            )
    return report


def round_half_away(x: float) -> int:
    """Round to nearest whole value, halves away from zero."""
    return int(math.floor(x + 0.5)) if x >= 0 else int(math.ceil(x - 0.5))


def clamp_assignment(space: SearchSpace, assignment: Params) -> Params:
    """Repair an assignment so it validates: numeric values clamped into
    range, integers rounded half-away then clamped, unknown categorical
    values replaced by the first choice.

    The key set must already match the space; clamping cannot invent or
    drop parameters.
    """
    if set(assignment) != set(space.params):
        missing = set(space.params) - set(assignment)
        extra = set(assignment) - set(space.params)
        raise ConfigurationError(
            f"assignment key set mismatch (missing={sorted(missing)}, extra={sorted(extra)})"
        )
    out: Params = {}
    for name, spec in space.params.items():
        value = assignment[name]
        if spec.kind == CATEGORICAL:
            out[name] = value if isinstance(value, str) and value in spec.choices else spec.choices[0]
            continue
        try:
            v = float(value)
        except (TypeError, ValueError):
            v = spec.low
        if not math.isfinite(v):
            v = spec.low
        if spec.kind == INTEGER:
            n = round_half_away(v)
            out[name] = min(max(n, int(spec.low)), int(spec.high))
        else:
            out[name] = min(max(v, spec.low), spec.high)
    return out


@dataclass
class SpaceUpdateReport:
    applied: list[str] = field(default_factory=list)
    rejected: dict[str, str] = field(default_factory=dict)
    widened: list[str] = field(default_factory=list)


def apply_space_update(
    space: SearchSpace, new_ranges: Mapping[str, Any], best: Params | None
) -> tuple[SearchSpace, SpaceUpdateReport]:
    """Apply proposed range updates, returning a new space and a report.

    Proposals are interpreted by the existing kind of each parameter:
    ``[low, high]`` for numeric kinds, a list of choices for categoricals.
    The parameter set is frozen, so unknown names are rejected. A numeric
    range excluding the current best value is widened minimally to include
    it (categorical proposals get the best choice appended), so the best
    assignment always validates against the updated space. The version is
    bumped only when at least one parameter was applied.
    """
    report = SpaceUpdateReport()
    updated = space.copy()
    best = best or {}
    for name, proposal in new_ranges.items():
        spec = space.params.get(name)
        if spec is None:
            report.rejected[name] = "unknown parameter; the set is frozen after init"
            continue
        try:
            new_spec = _build_updated_spec(spec, proposal, best.get(name), report)
        except (ConfigurationError, TypeError, ValueError) as exc:
            report.rejected[name] = str(exc)
            continue
        updated.params[name] = new_spec
        report.applied.append(name)
    if report.applied:
        updated.version = space.version + 1
    return updated, report


def _build_updated_spec(
    spec: ParamSpec, proposal: Any, best_value: Any, report: SpaceUpdateReport
) -> ParamSpec:
    if not isinstance(proposal, (list, tuple)):
        raise ConfigurationError("proposal must be a list")
    if spec.kind == CATEGORICAL:
        choices = [str(c) for c in proposal]
        if isinstance(best_value, str) and best_value not in choices:
            choices.append(best_value)
            report.widened.append(spec.name)
        return ParamSpec(spec.name, CATEGORICAL, choices=choices)
    if len(proposal) != 2:
        raise ConfigurationError("numeric proposal must be [low, high]")
    low, high = float(proposal[0]), float(proposal[1])
    if low >= high:
        raise ConfigurationError(f"inverted range [{low}, {high}]")
    if spec.kind == INTEGER:
        low, high = float(math.floor(low)), float(math.ceil(high))
    if isinstance(best_value, (int, float)) and not isinstance(best_value, bool):
        b = float(best_value)
        if b < low or b > high:
            low, high = min(low, b), max(high, b)
            if spec.kind == INTEGER:
                low, high = float(math.floor(low)), float(math.ceil(high))
            report.widened.append(spec.name)
    return ParamSpec(spec.name, spec.kind, low=low, high=high, log_scale=spec.log_scale)


def uniform_assignment(space: SearchSpace, rng) -> Params:
    """Uniform draw from the space (log-uniform where log_scale is set)."""
    out: Params = {}
    for name, spec in space.params.items():
        if spec.kind == CATEGORICAL:
            out[name] = spec.choices[int(rng.integers(len(spec.choices)))]
        elif spec.kind == INTEGER:
            out[name] = int(rng.integers(int(spec.low), int(spec.high) + 1))
        elif spec.log_scale:
            out[name] = math.exp(rng.uniform(math.log(spec.low), math.log(spec.high)))
        else:
            out[name] = float(rng.uniform(spec.low, spec.high))
    return out
