"""Verdicts: agent-judged, programmatic, or human.

The agent evaluator is fail-safe by construction: no unparsable response can
ever come back as solved.
"""

from __future__ import annotations

import re
from enum import Enum
from typing import Any, Callable

from .errors import ConfigurationError
from .prompts import render_prompt
from .providers import ChatMessage, CompletionRequest, Provider
from .types import Goal, Verdict

EVALUATOR_AGENT = "evaluator"

# Sign-aware: the last integer or decimal literal in the text.
_NUMBER = re.compile(r"[-+]?\d+(?:\.\d+)?")


class CheckerKind(str, Enum):
    EXACT_NUMERIC = "exact_numeric"
    ALL_TESTS_PASS = "all_tests_pass"
    FULL_COVERAGE = "full_coverage"
    CRAFTING_GOAL = "crafting_goal"


def parse_verdict(text: str) -> Verdict | None:
    """Grammar: first line SOLVED or UNSOLVED, remainder is feedback.

    Returns None when the marker is missing or a rejection has no feedback.
    """
    lines = text.strip().splitlines()
    first = lines[0].strip() if lines else ""
    rest = "\n".join(lines[1:]).strip()
    if first == "SOLVED":
        return Verdict(solved=True, feedback=rest)
    if first == "UNSOLVED" and rest:
        return Verdict(solved=False, feedback=rest)
    return None


def evaluate_agent(
    state_rendering: str,
    goal: Goal,
    evaluator_provider: Provider,
    template_id: str = "evaluator",
    extra_bindings: dict[str, str] | None = None,
) -> Verdict:
    """Ask the evaluator agent for a verdict on (state rendering, goal).

    One re-ask on an unparsable reply, then fall back to UNSOLVED with the
    raw text as feedback so a garbage response never counts as success.
    """
    bindings = {"goal": goal.text, "state": state_rendering}
    if extra_bindings:
        bindings.update(extra_bindings)
    messages = render_prompt(template_id, bindings)
    reply = evaluator_provider.complete(
        CompletionRequest(messages=messages, agent=EVALUATOR_AGENT)
    )
    verdict = parse_verdict(reply.content)
    if verdict is not None:
        return verdict
    reminder = ChatMessage(
        role="user",
        content=(
            "Your reply must start with SOLVED or UNSOLVED on the first line; "
            "an UNSOLVED verdict must be followed by feedback."
        ),
    )
    retry = messages + [reply, reminder]
    second = evaluator_provider.complete(
        CompletionRequest(messages=retry, agent=EVALUATOR_AGENT)
    )
    verdict = parse_verdict(second.content)
    if verdict is not None:
        return verdict
    raw = second.content.strip() or reply.content.strip() or "unparsable evaluator response"
    return Verdict(solved=False, feedback=raw)


def extract_last_number(text: str) -> float | None:
    matches = _NUMBER.findall(text)
    if not matches:
        return None
    return float(matches[-1])


def evaluate_programmatic(
    state: dict[str, Any],
    goal: Goal,
    checker: CheckerKind | str,
    gold: Any,
) -> Verdict:
    """Pure verdict from the environment's evaluation view.

    Every rejection's feedback names the concrete deficit: the expected
    number, the failing test names, the missing concepts, or the unmet
    crafting target.
    """
    checker = CheckerKind(checker)

    if checker is CheckerKind.EXACT_NUMERIC:
        if gold is None:
            raise ConfigurationError("exact_numeric checker requires a gold answer")
        expected = float(gold)
        answer = state.get("answer") or ""
        extracted = extract_last_number(answer)
        if extracted is not None and extracted == expected:
            return Verdict(solved=True, feedback="", score=1.0)
        shown = "no number found" if extracted is None else f"extracted {extracted:g}"
        return Verdict(
            solved=False,
            feedback=f"answer is incorrect: expected {expected:g}, {shown}",
            score=0.0,
        )

    if checker is CheckerKind.ALL_TESTS_PASS:
        report = state.get("test_report")
        if report is None:
            error = state.get("error") or "no tests were executed"
            return Verdict(solved=False, feedback=f"code execution failed: {error}", score=0.0)
        total, passed = report["total"], report["passed"]
        if total > 0 and passed == total:
            return Verdict(solved=True, feedback="", score=1.0)
        failing = ", ".join(name for name, _ in report.get("failures", [])) or "none ran"
        details = "; ".join(f"{name}: {msg}" for name, msg in report.get("failures", []))
        return Verdict(
            solved=False,
            feedback=(
                f"{passed}/{total} tests passed; failing tests: {failing}"
                + (f" ({details})" if details else "")
            ),
            score=(passed / total) if total else 0.0,
        )

    if checker is CheckerKind.FULL_COVERAGE:
        missing = sorted(state.get("missing", []))
        covered = state.get("covered", [])
        total = len(missing) + len(covered)
        if not missing and total > 0:
            return Verdict(solved=True, feedback="", score=1.0)
        return Verdict(
            solved=False,
            feedback=f"missing concepts: {', '.join(missing) or '(no answer produced)'}",
            score=(len(covered) / total) if total else 0.0,
        )

    # crafting: target item count reached in any single agent's inventory
    if gold is None or "item" not in gold:
        raise ConfigurationError("crafting_goal checker requires gold {item, count}")
    item = gold["item"]
    count = int(gold.get("count", 1))
    inventories = state.get("inventories", {})
    best = max((inv.get(item, 0) for inv in inventories.values()), default=0)
    if best >= count:
        return Verdict(solved=True, feedback="", score=1.0)
    failed = [
        f"{agent}: {r['text']} ({r['reason'] or 'failed'})"
        for agent, results in sorted(state.get("subtasks", {}).items())
        for r in results
        if not r["completed"]
    ]
    feedback = (
        f"target not met: need {count} {item} in one inventory, best is {best}. "
        f"Inventories: {inventories}."
    )
    if failed:
        feedback += " Failed sub-tasks: " + "; ".join(failed)
    return Verdict(solved=False, feedback=feedback, score=min(1.0, best / count))


FeedbackSource = Callable[[str, Goal], Verdict | None]


def evaluate_human(
    state_rendering: str,
    goal: Goal,
    feedback_source: FeedbackSource,
) -> Verdict | None:
    """Pull a verdict from the attached human source.

    Returns None when the source has nothing yet (the kernel parks the run);
    sources must re-prompt until a rejection carries feedback.
    """
    if feedback_source is None:
        raise ConfigurationError("no human feedback source attached")
    return feedback_source(state_rendering, goal)


def terminal_feedback_source(
    input_fn: Callable[[str], str] = input,
    output_fn: Callable[[str], None] = print,
) -> FeedbackSource:
    """Interactive prompt source; re-prompts until a rejection has feedback."""

    def source(state_rendering: str, goal: Goal) -> Verdict:
        output_fn(f"Goal: {goal.text}")
        output_fn(f"Current state:\n{state_rendering}")
        while True:
            answer = input_fn("Solved? [y/n] ").strip().lower()
            if answer in ("y", "yes"):
                return Verdict(solved=True, feedback="")
            if answer in ("n", "no"):
                feedback = input_fn("Feedback for the next round: ").strip()
                if feedback:
                    return Verdict(solved=False, feedback=feedback)
                output_fn("A rejection needs feedback; please describe what is missing.")
            else:
                output_fn("Please answer y or n.")

    return source
