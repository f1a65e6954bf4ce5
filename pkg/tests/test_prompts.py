"""Template fidelity and prompt-construction checks.

The fidelity test renders each template with unique sentinels, replaces the
sentinels back with their placeholder markers, and requires the result to
equal the golden copy byte for byte, proving rendering is pure substitution.
"""

import string
from pathlib import Path

import pytest

from tunelab.errors import ConfigurationError, TemplateError
from tunelab.llm.prompts import (
    PLAIN,
    REASONING,
    SUMMARY_HISTORY,
    TPE_INDEPENDENT,
    TPE_RELATIVE,
    build_init_messages,
    build_opt_messages,
    build_summarize_messages,
    fmt_ranges,
    load_template,
    render,
)
from tunelab.space import CONTINUOUS, INTEGER, ParamSpec, SearchSpace

GOLDEN = Path(__file__).parent / "golden"

TEMPLATE_NAMES = sorted(p.stem for p in GOLDEN.glob("*.txt"))


def placeholders(text: str) -> set[str]:
    return {name for _, name, _, _ in string.Formatter().parse(text) if name}


class TestTemplateFidelity:
    @pytest.mark.parametrize("name", TEMPLATE_NAMES)
    def test_render_is_pure_substitution(self, name):
        golden = (GOLDEN / f"{name}.txt").read_text()
        keys = placeholders(golden)
        sentinels = {key: f"«{key}-sentinel»" for key in keys}
        rendered = render(name, sentinels)
        restored = rendered
        for key, sentinel in sentinels.items():
            restored = restored.replace(sentinel, "{" + key + "}")
        assert restored == golden

    @pytest.mark.parametrize("name", TEMPLATE_NAMES)
    def test_packaged_template_matches_golden(self, name):
        assert load_template(name) == (GOLDEN / f"{name}.txt").read_text()

    def test_missing_placeholder_names_the_key(self):
        with pytest.raises(TemplateError) as excinfo:
            render("opt_fully_llm_rolling", {"model_name": "m"})
        assert excinfo.value.placeholder in placeholders(load_template("opt_fully_llm_rolling"))


@pytest.fixture
def lgbm_like_space():
    return SearchSpace.of(
        ParamSpec("num_leaves", INTEGER, low=8, high=256),
        ParamSpec("max_depth", INTEGER, low=2, high=12),
        ParamSpec("learning_rate", CONTINUOUS, low=0.001, high=0.3),
    )


class TestInitMessages:
    def test_plain_mode_user_message(self, task):
        messages = build_init_messages(task, PLAIN)
        assert messages[-1].content == (
            "Provide the initial hyperparameters to tune, their ranges, and starting values.\n"
        )

    def test_reasoning_system_requests_reason_key(self, task):
        messages = build_init_messages(task, REASONING)
        assert messages[0].role == "system"
        assert "and 'reason'" in messages[0].content

    def test_plain_summary_history_uses_long_system_message(self, task):
        messages = build_init_messages(task, PLAIN, history_mode=SUMMARY_HISTORY)
        assert "During the optimization process" in messages[0].content

    def test_independent_init_names_param_and_range(self, task, unit_space):
        messages = build_init_messages(task, TPE_INDEPENDENT, space=unit_space, param_name="x")
        assert "Suggest a value for the parameter 'x' within its range: [0, 1]." in messages[-1].content

    def test_relative_init_embeds_search_space(self, task, lgbm_like_space):
        messages = build_init_messages(task, TPE_RELATIVE, space=lgbm_like_space)
        assert fmt_ranges(lgbm_like_space) in messages[-1].content
        assert "Suggest integer for num_leaves, max_depth, float otherwise." in messages[-1].content

    def test_relative_init_requires_space(self, task):
        with pytest.raises(ConfigurationError):
            build_init_messages(task, TPE_RELATIVE)

    def test_task_fields_substituted(self, task):
        messages = build_init_messages(task, PLAIN)
        assert task.model_name in messages[0].content
        assert task.metric in messages[0].content
        assert "minimize" in messages[0].content


class TestOptMessages:
    def test_plain_contains_best_score(self, task, unit_space):
        messages = build_opt_messages(task, 0.81, {"x": 0.4}, unit_space, PLAIN, history=[])
        assert "Current best score: 0.81" in messages[-1].content

    def test_reasoning_contains_think_step_by_step(self, task, unit_space):
        messages = build_opt_messages(task, 0.5, {"x": 0.4}, unit_space, REASONING, history=[])
        assert "think step by step" in messages[-1].content

    def test_relative_lists_integer_parameters(self, task, lgbm_like_space):
        messages = build_opt_messages(
            task, 0.5, {"num_leaves": 31, "max_depth": 6, "learning_rate": 0.1},
            lgbm_like_space, TPE_RELATIVE, history=[],
        )
        assert "Suggest integer for num_leaves, max_depth" in messages[-1].content

    def test_independent_requires_param_name(self, task, unit_space):
        with pytest.raises(ConfigurationError):
            build_opt_messages(task, 0.5, {"x": 0.1}, unit_space, TPE_INDEPENDENT, history=[])

    def test_history_is_prefixed(self, task, unit_space):
        from tunelab.llm.client import ChatMessage

        history = [ChatMessage("system", "s"), ChatMessage("assistant", "a")]
        messages = build_opt_messages(task, 1.0, {"x": 0.1}, unit_space, PLAIN, history=history)
        assert messages[:2] == history and messages[-1].role == "user"

    def test_ranges_rendered_with_whole_floats_as_ints(self, task):
        space = SearchSpace.of(ParamSpec("x", CONTINUOUS, low=0.0, high=10.0))
        messages = build_opt_messages(task, 1.0, {"x": 5.0}, space, PLAIN, history=[])
        assert "{'x': [0, 10]}" in messages[-1].content
        assert "{'x': 5}" in messages[-1].content


class TestSummarizeMessages:
    def test_embeds_serialized_conversation(self):
        from tunelab.llm.client import ChatMessage

        messages = build_summarize_messages([ChatMessage("user", "hello there")])
        assert messages[0].content.startswith("Summarize the conversation history")
        assert '"hello there"' in messages[0].content
