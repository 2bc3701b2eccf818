import pytest

from agentkernel.errors import PromptError
from agentkernel.prompts import list_templates, render_prompt


def test_recruiter_template_binds_goal():
    messages = render_prompt("recruiter", {"goal": "G", "n_experts": "2"})
    assert [m.role for m in messages] == ["system", "user"]
    assert "G" in messages[1].content


def test_missing_binding_names_the_placeholder():
    with pytest.raises(PromptError) as excinfo:
        render_prompt("recruiter_feedback", {"goal": "G", "n_experts": "2"})
    assert "unbound placeholder: feedback" in str(excinfo.value)


def test_rendering_is_deterministic():
    bindings = {"goal": "G", "n_experts": "3"}
    first = render_prompt("recruiter", bindings)
    second = render_prompt("recruiter", bindings)
    assert [(m.role, m.content) for m in first] == [(m.role, m.content) for m in second]


def test_unknown_template_rejected():
    with pytest.raises(PromptError):
        render_prompt("nonexistent", {})


def test_no_placeholder_survives_rendering():
    import re

    cases = {
        "recruiter": {"goal": "g", "n_experts": "2"},
        "recruiter_feedback": {"goal": "g", "n_experts": "2", "feedback": "f"},
        "solver": {"persona": "p", "context": "c"},
        "solver_refine": {"persona": "p", "context": "c", "proposal": "x", "critiques": "y"},
        "reviewer": {"persona": "p", "context": "c", "proposal": "x"},
        "discussant": {"persona": "p", "context": "c", "transcript": "t", "agent": "a"},
        "summarizer": {"context": "c", "transcript": "t", "agents": "a, b"},
        "evaluator": {"goal": "g", "state": "s"},
        "evaluator_comparative": {"goal": "g", "state": "s", "reference": "r"},
        "react-executor": {"persona": "p", "tools": "- t: does t", "task": "k"},
        "cot": {"goal": "g"},
    }
    assert sorted(cases) == list_templates()
    for template_id, bindings in cases.items():
        for message in render_prompt(template_id, bindings):
            assert not re.search(r"\{[a-z][a-z0-9_]*\}", message.content), template_id


def test_substitution_is_single_pass():
    # A binding value that looks like a placeholder must be emitted literally.
    messages = render_prompt("cot", {"goal": "{n_experts}"})
    assert "{n_experts}" in messages[1].content
