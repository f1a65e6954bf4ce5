"""Objective functions and the evaluation harness.

Builtins are pure analytic benchmarks with known optima plus a small
categorical grid for exhaustive checks. The external kind spawns a child
process: one JSON line of parameter values on stdin, a JSON object with a
"score" key expected on stdout, exit status 0 required, stderr passed
through to the parent's log.
"""

from __future__ import annotations

import json
import logging
import math
import subprocess
from dataclasses import dataclass
from typing import Sequence

from .errors import ConfigurationError, EvaluatorError
from .jsonutil import iter_json_values
from .space import CATEGORICAL, CONTINUOUS, Params, ParamSpec, SearchSpace

log = logging.getLogger("tunelab.objectives")

BUILTIN = "builtin"
EXTERNAL = "external"

BUILTIN_NAMES = ("branin", "rosenbrock", "sphere", "discrete_grid")


def branin(x1: float, x2: float) -> float:
    a = 1.0
    b = 5.1 / (4.0 * math.pi**2)
    c = 5.0 / math.pi
    r = 6.0
    s = 10.0
    t = 1.0 / (8.0 * math.pi)
    return a * (x2 - b * x1**2 + c * x1 - r) ** 2 + s * (1 - t) * math.cos(x1) + s


def rosenbrock(xs: Sequence[float]) -> float:
    return sum(100.0 * (xs[i + 1] - xs[i] ** 2) ** 2 + (1 - xs[i]) ** 2 for i in range(len(xs) - 1))


def sphere(xs: Sequence[float]) -> float:
    return sum(x**2 for x in xs)


# Fixed score table behind the categorical-only grid; small enough that the
# density-ratio argmax can be computed exhaustively.
DISCRETE_GRID_SCORES = {
    ("a", "u"): 0.10,
    ("a", "v"): 0.90,
    ("b", "u"): 0.40,
    ("b", "v"): 0.70,
    ("c", "u"): 0.55,
    ("c", "v"): 0.25,
}


def discrete_grid(c1: str, c2: str) -> float:
    try:
        return DISCRETE_GRID_SCORES[(c1, c2)]
    except KeyError:
        raise EvaluatorError(f"unknown grid cell ({c1!r}, {c2!r})") from None


def default_space(builtin_name: str) -> SearchSpace:
    """The canonical space each builtin is defined over."""
    if builtin_name == "branin":
        return SearchSpace.of(
            ParamSpec("x1", CONTINUOUS, low=-5.0, high=10.0),
            ParamSpec("x2", CONTINUOUS, low=0.0, high=15.0),
        )
    if builtin_name == "rosenbrock":
        return SearchSpace.of(
            ParamSpec("x1", CONTINUOUS, low=-5.0, high=10.0),
            ParamSpec("x2", CONTINUOUS, low=-5.0, high=10.0),
        )
    if builtin_name == "sphere":
        return SearchSpace.of(
            ParamSpec("x1", CONTINUOUS, low=-5.12, high=5.12),
            ParamSpec("x2", CONTINUOUS, low=-5.12, high=5.12),
        )
    if builtin_name == "discrete_grid":
        return SearchSpace.of(
            ParamSpec("c1", CATEGORICAL, choices=["a", "b", "c"]),
            ParamSpec("c2", CATEGORICAL, choices=["u", "v"]),
        )
    raise ConfigurationError(f"unknown builtin objective {builtin_name!r}")


@dataclass
class ObjectiveSpec:
    kind: str = BUILTIN
    name: str = "sphere"
    command: list[str] | None = None
    cwd: str | None = None
    timeout: float = 60.0

    def __post_init__(self):
        if self.kind not in (BUILTIN, EXTERNAL):
            raise ConfigurationError(f"unknown objective kind {self.kind!r}")
        if self.kind == BUILTIN and self.name not in BUILTIN_NAMES:
            raise ConfigurationError(f"unknown builtin objective {self.name!r}")
        if self.kind == EXTERNAL and not self.command:
            raise ConfigurationError("external objective needs a command")
        if self.timeout <= 0:
            raise ConfigurationError("timeout must be > 0")


def _vector(assignment: Params) -> list[float]:
    """Values of x1..xn in index order."""
    names = sorted(
        (n for n in assignment if n.startswith("x") and n[1:].isdigit()),
        key=lambda n: int(n[1:]),
    )
    if not names:
        raise EvaluatorError("numeric builtins expect parameters named x1..xn")
    return [float(assignment[n]) for n in names]


def evaluate(spec: ObjectiveSpec, assignment: Params) -> float:
    """Score one assignment. External failures raise EvaluatorError; the
    study maps those to the sentinel score."""
    if spec.kind == BUILTIN:
        return _evaluate_builtin(spec.name, assignment)
    return _evaluate_external(spec, assignment)


def _evaluate_builtin(name: str, assignment: Params) -> float:
    if name == "branin":
        vec = _vector(assignment)
        if len(vec) != 2:
            raise EvaluatorError("branin is 2-dimensional")
        return branin(vec[0], vec[1])
    if name == "rosenbrock":
        return rosenbrock(_vector(assignment))
    if name == "sphere":
        return sphere(_vector(assignment))
    if name == "discrete_grid":
        try:
            return discrete_grid(assignment["c1"], assignment["c2"])
        except KeyError as exc:
            raise EvaluatorError(f"discrete_grid expects c1 and c2: {exc}") from exc
    raise ConfigurationError(f"unknown builtin objective {name!r}")


def _evaluate_external(spec: ObjectiveSpec, assignment: Params) -> float:
    line = json.dumps(assignment) + "\n"
    try:
        proc = subprocess.run(
            spec.command,
            input=line,
            capture_output=True,
            text=True,
            timeout=spec.timeout,
            cwd=spec.cwd,
        )
    except subprocess.TimeoutExpired as exc:
        raise EvaluatorError(f"objective timed out after {spec.timeout}s") from exc
    except OSError as exc:
        raise EvaluatorError(f"failed to spawn objective: {exc}") from exc
    if proc.stderr:
        for errline in proc.stderr.splitlines():
            log.info("objective stderr: %s", errline)
    if proc.returncode != 0:
        raise EvaluatorError(f"objective exited with status {proc.returncode}")
    for value in iter_json_values(proc.stdout):
        if isinstance(value, dict) and "score" in value:
            try:
                score = float(value["score"])
            except (TypeError, ValueError) as exc:
                raise EvaluatorError(f"non-numeric score: {value['score']!r}") from exc
            if "std" in value:
                log.info("objective dispersion: %s", value["std"])
            return score
    raise EvaluatorError("objective stdout carried no object with a 'score' key")
