import random

import pytest

from agentkernel.errors import ValidationError
from agentkernel.execution.react import (
    Conclusion,
    ConclusionStatus,
    Tool,
    ToolRegistry,
    calculator_tool,
    evaluate_expression,
    file_fetch_tool,
    parse_step,
    react_loop,
)
from agentkernel.providers import ChatMessage, ScriptedProvider


def registry(extra=None):
    tools = [calculator_tool()]
    if extra:
        tools.extend(extra)
    return ToolRegistry(tools)


class TestStepGrammar:
    def test_action_with_json_args(self):
        kind, detail = parse_step(
            ChatMessage(role="assistant", content='THOUGHT: multiply\nACTION: calculator {"expr": "3*8"}')
        )
        assert kind == "call"
        assert detail == ("calculator", {"expr": "3*8"})

    def test_action_without_args(self):
        kind, detail = parse_step(ChatMessage(role="assistant", content="ACTION: lister"))
        assert kind == "call" and detail == ("lister", {})

    def test_final_finished(self):
        kind, detail = parse_step(
            ChatMessage(role="assistant", content="FINAL: finished the answer is 24")
        )
        assert kind == "final" and detail == ("finished", "the answer is 24")

    def test_final_pending(self):
        kind, detail = parse_step(ChatMessage(role="assistant", content="FINAL: pending need web access"))
        assert kind == "final" and detail[0] == "pending"

    def test_bad_json_is_malformed(self):
        kind, _ = parse_step(
            ChatMessage(role="assistant", content="ACTION: calculator {expr: 3*8}")
        )
        assert kind == "malformed"

    def test_prose_is_malformed(self):
        kind, _ = parse_step(ChatMessage(role="assistant", content="let me think about it"))
        assert kind == "malformed"

    def test_structured_tool_calls_take_precedence(self):
        message = ChatMessage(
            role="assistant",
            content="",
            tool_calls=[{"function": {"name": "calculator", "arguments": '{"expr": "1+1"}'}}],
        )
        kind, detail = parse_step(message)
        assert kind == "call" and detail == ("calculator", {"expr": "1+1"})


class TestReactLoop:
    def test_conclude_at_step_one(self):
        provider = ScriptedProvider([("agent", "FINAL: finished done immediately")])
        conclusion = react_loop("agent", registry(), "task", provider)
        assert conclusion.status is ConclusionStatus.FINISHED
        assert conclusion.steps_used == 1

    def test_never_concluding_agent_is_forced_pending_at_cap(self):
        provider = ScriptedProvider(
            [("agent", 'ACTION: calculator {"expr": "1+1"}')] * 10
        )
        conclusion = react_loop("agent", registry(), "task", provider, max_steps=10)
        assert conclusion.steps_used == 10
        assert conclusion.status is ConclusionStatus.PENDING

    def test_calculator_result_feeds_back_as_observation(self):
        provider = ScriptedProvider(
            [
                ("agent", 'THOUGHT: compute\nACTION: calculator {"expr": "3*8"}'),
                ("agent", "FINAL: finished it is 24"),
            ]
        )
        observations = []
        conclusion = react_loop(
            "agent",
            registry(),
            "task",
            provider,
            on_step=lambda step, kind, payload: (
                observations.append(payload["observation"]) if kind == "tool_call" else None
            ),
        )
        assert conclusion.steps_used == 2
        assert observations == [str(3 * 8)]

    def test_unknown_tool_becomes_observation_and_loop_continues(self):
        provider = ScriptedProvider(
            [
                ("agent", 'ACTION: webcam {"x": 1}'),
                ("agent", "FINAL: pending no webcam here"),
            ]
        )
        seen = []
        conclusion = react_loop(
            "agent",
            registry(),
            "task",
            provider,
            on_step=lambda step, kind, payload: (
                seen.append(payload["observation"]) if kind == "tool_call" else None
            ),
        )
        assert conclusion.steps_used == 2
        assert "unknown tool" in seen[0]

    def test_two_consecutive_malformed_forces_pending(self):
        provider = ScriptedProvider(
            [("agent", "nonsense one"), ("agent", "nonsense two"), ("agent", "unused")]
        )
        conclusion = react_loop("agent", registry(), "task", provider)
        assert conclusion.status is ConclusionStatus.PENDING
        assert conclusion.steps_used == 2
        assert provider.remaining() == 1

    def test_malformed_streak_resets_on_valid_call(self):
        provider = ScriptedProvider(
            [
                ("agent", "oops"),
                ("agent", 'ACTION: calculator {"expr": "2+2"}'),
                ("agent", "oops again"),
                ("agent", "FINAL: finished 4"),
            ]
        )
        conclusion = react_loop("agent", registry(), "task", provider)
        assert conclusion.status is ConclusionStatus.FINISHED
        assert conclusion.steps_used == 4

    def test_tool_exception_becomes_error_observation(self):
        def boom(args):
            raise RuntimeError("tool exploded")

        tools = registry([Tool(name="bomb", description="explodes", fn=boom)])
        provider = ScriptedProvider(
            [("agent", "ACTION: bomb"), ("agent", "FINAL: pending gave up")]
        )
        seen = []
        react_loop(
            "agent", tools, "task", provider,
            on_step=lambda step, kind, payload: (
                seen.append(payload["observation"]) if kind == "tool_call" else None
            ),
        )
        assert "tool exploded" in seen[0]

    def test_max_steps_must_be_positive(self):
        with pytest.raises(ValidationError):
            react_loop("a", registry(), "t", ScriptedProvider([]), max_steps=0)

    def test_100_random_agents_always_conclude_within_cap(self):
        rng = random.Random(11)
        for _ in range(100):
            max_steps = rng.randint(1, 10)
            entries = []
            for _ in range(max_steps):
                roll = rng.random()
                if roll < 0.30:
                    entries.append(("agent", f'ACTION: calculator {{"expr": "{rng.randint(1, 9)}+1"}}'))
                elif roll < 0.45:
                    entries.append(("agent", "ACTION: missing_tool"))
                elif roll < 0.60:
                    entries.append(("agent", "rambling " * rng.randint(1, 3)))
                elif roll < 0.80:
                    entries.append(("agent", f"FINAL: finished answer {rng.randint(0, 99)}"))
                else:
                    entries.append(("agent", "FINAL: pending stuck"))
            provider = ScriptedProvider(entries)
            conclusion = react_loop("agent", registry(), "task", provider, max_steps=max_steps)
            assert isinstance(conclusion, Conclusion)
            assert conclusion.steps_used <= max_steps
            assert conclusion.status in (ConclusionStatus.PENDING, ConclusionStatus.FINISHED)


class TestBuiltinTools:
    @pytest.mark.parametrize(
        "expr,expected",
        [("3*8", "24"), ("(2+3)*4", "20"), ("7/2", "3.5"), ("2**5", "32"), ("-4+1", "-3")],
    )
    def test_calculator_matches_python_semantics(self, expr, expected):
        assert evaluate_expression(expr) == expected

    def test_calculator_refuses_names_and_calls(self):
        assert evaluate_expression("__import__('os')").startswith("error")
        assert evaluate_expression("max(1, 2)").startswith("error")

    def test_calculator_handles_division_by_zero(self):
        assert evaluate_expression("1/0").startswith("error")

    def test_file_fetch_from_mapping(self):
        tool = file_fetch_tool({"notes": "remember the milk"})
        assert tool.fn({"name": "notes"}) == "remember the milk"
        assert "no document" in tool.fn({"name": "missing"})

    def test_file_fetch_from_directory(self, tmp_path):
        (tmp_path / "doc.txt").write_text("hello from disk", encoding="utf-8")
        tool = file_fetch_tool(tmp_path)
        assert tool.fn({"name": "doc"}) == "hello from disk"
        assert "available: doc" in tool.fn({"name": "nope"})

    def test_registry_rejects_duplicates(self):
        with pytest.raises(ValidationError):
            ToolRegistry([calculator_tool(), calculator_tool()])
