import json

import pytest

from tunelab.llm.client import MockChatClient
from tunelab.llm.prompts import TaskDescription
from tunelab.space import CATEGORICAL, CONTINUOUS, INTEGER, ParamSpec, SearchSpace

# ---------------------------------------------------------------------------
# Acceptance reporting: tests in test_acceptance.py carry a `criterion`
# marker; one PASS/FAIL line per criterion is printed in the terminal summary.
# ---------------------------------------------------------------------------

_ACCEPTANCE: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion metadata")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker and report.when == "call":
        number, title = marker.args
        _ACCEPTANCE[number] = (title, report.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, outcome = _ACCEPTANCE[number]
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"criterion {number:2d} [{status}] {title}")


# ---------------------------------------------------------------------------
# Shared fixtures and helpers
# ---------------------------------------------------------------------------


@pytest.fixture
def task():
    return TaskDescription(
        model_name="gradient-boosted trees",
        problem_description="tabular regression benchmark",
        metric="mae",
        direction="minimize",
    )


@pytest.fixture
def unit_space():
    return SearchSpace.of(ParamSpec("x", CONTINUOUS, low=0.0, high=1.0))


@pytest.fixture
def mixed_space():
    return SearchSpace.of(
        ParamSpec("x", CONTINUOUS, low=0.0, high=1.0),
        ParamSpec("n", INTEGER, low=1, high=10),
        ParamSpec("c", CATEGORICAL, choices=["a", "b"]),
    )


def opt_reply(params: dict, update: dict | None = None, reason: str | None = None) -> str:
    payload: dict = {"update_param_ranges": update is not None, "next_params": params}
    if update is not None:
        payload["new_param_ranges"] = update
    if reason is not None:
        payload["reason"] = reason
    return json.dumps(payload)


def init_reply(ranges: dict, initial: dict, reason: str | None = None) -> str:
    payload: dict = {"param_ranges": ranges, "initial_params": initial}
    if reason is not None:
        payload["reason"] = reason
    return json.dumps(payload)


def always_valid_responder(space: SearchSpace, value_cycle=None):
    """Responder answering every prompt shape with in-range values."""
    values = {}
    for name, spec in space.params.items():
        if spec.kind == CATEGORICAL:
            values[name] = spec.choices[0]
        else:
            values[name] = (spec.low + spec.high) / 2

    def responder(messages):
        last = messages[-1].content
        if last.startswith("Summarize the conversation history"):
            return json.dumps([{"role": "assistant", "content": "condensed history"}])
        if last.startswith("Provide the initial hyperparameters"):
            return init_reply(space.param_ranges_wire(), values)
        if "'update_param_ranges'" in last:
            return opt_reply(values)
        return json.dumps(values)

    return responder


def make_mock(space: SearchSpace, **kwargs) -> MockChatClient:
    return MockChatClient(responder=always_valid_responder(space), **kwargs)
