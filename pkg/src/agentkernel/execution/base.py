"""Environments and the execute dispatch that applies a group decision."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

from ..decision import GroupDecision
from ..errors import ConfigurationError
from ..providers import Provider
from ..types import ExpertProfile
from .coverage import concept_coverage
from .crafting import (
    ATTEMPT_CAP_DEFAULT,
    CraftingWorld,
    execute_crafting_assignments,
)
from .react import Conclusion, ToolRegistry, default_registry, react_loop
from .sandbox import SandboxLimits, TestReport, run_unit_tests

ExecEventCallback = Callable[[str, str | None, dict], None]  # (kind, agent, payload)

_CODE_BLOCK = re.compile(r"```(?:[\w+-]*)\n(.*?)```", re.DOTALL)


def extract_code_block(text: str) -> str | None:
    """First fenced code block wins; None when there is no block at all."""
    m = _CODE_BLOCK.search(text)
    return m.group(1) if m else None


@dataclass
class ExecutionReport:
    kind: str
    summary: str
    ok: bool = True
    per_agent: dict[str, str] = field(default_factory=dict)
    test_report: TestReport | None = None
    conclusions: dict[str, Conclusion] = field(default_factory=dict)
    subtasks: dict[str, list] = field(default_factory=dict)

    def to_payload(self) -> dict[str, Any]:
        payload: dict[str, Any] = {
            "kind": self.kind,
            "summary": self.summary,
            "ok": self.ok,
            "per_agent": dict(sorted(self.per_agent.items())),
        }
        if self.test_report is not None:
            payload["test_report"] = self.test_report.to_dict()
        if self.conclusions:
            payload["conclusions"] = {
                agent: {
                    "status": c.status.value,
                    "summary": c.summary,
                    "steps_used": c.steps_used,
                }
                for agent, c in sorted(self.conclusions.items())
            }
        if self.subtasks:
            payload["subtasks"] = {
                agent: [r.to_dict() for r in results]
                for agent, results in sorted(self.subtasks.items())
            }
        return payload


class Environment:
    """Base environment: holds kind-specific state, renders observations,
    and carries the goal predicate inputs (checker + gold) for evaluation."""

    kind = "answer"

    def __init__(self, checker: str | None = None, gold: Any = None):
        self.checker = checker
        self.gold = gold

    def observation(self) -> str:
        raise NotImplementedError

    def evaluation_view(self) -> dict[str, Any]:
        raise NotImplementedError


class AnswerEnv(Environment):
    """Holds a single candidate answer; optionally checks concept coverage."""

    kind = "answer"

    def __init__(self, concepts: list[str] | None = None, **kwargs):
        super().__init__(**kwargs)
        self.concepts = [c.lower() for c in concepts] if concepts else None
        self.answer: str | None = None
        self.covered: set[str] = set()
        self.missing: set[str] = set(self.concepts or [])

    def apply_answer(self, text: str) -> None:
        self.answer = text
        if self.concepts:
            self.covered, self.missing = concept_coverage(text, self.concepts)

    def observation(self) -> str:
        if self.answer is None:
            return "(no answer yet)"
        rendering = f"Answer:\n{self.answer}"
        if self.concepts:
            rendering += f"\nMissing concepts: {sorted(self.missing) or 'none'}"
        return rendering

    def evaluation_view(self) -> dict[str, Any]:
        return {
            "answer": self.answer,
            "covered": sorted(self.covered),
            "missing": sorted(self.missing),
        }


class CodeEnv(Environment):
    """Runs the produced code against the task's test suite in the sandbox."""

    kind = "code"

    def __init__(self, tests: str, limits: SandboxLimits | None = None, **kwargs):
        super().__init__(**kwargs)
        self.tests = tests
        self.limits = limits or SandboxLimits()
        self.code: str | None = None
        self.report: TestReport | None = None
        self.error: str | None = None

    def run(self, code: str) -> TestReport:
        self.code = code
        self.error = None
        self.report = run_unit_tests(code, self.tests, self.limits)
        return self.report

    def observation(self) -> str:
        if self.error:
            return f"Execution error: {self.error}"
        if self.report is None:
            return "(no code executed yet)"
        lines = [f"Tests: {self.report.passed}/{self.report.total} passed"]
        lines.extend(f"FAILED {name}: {message}" for name, message in self.report.failures)
        return "\n".join(lines)

    def evaluation_view(self) -> dict[str, Any]:
        return {
            "code": self.code,
            "error": self.error,
            "test_report": self.report.to_dict() if self.report else None,
        }


class ToolEnv(Environment):
    """Tool-use tasks: each agent runs the tool loop on its share of the work."""

    kind = "tool"

    def __init__(
        self,
        registry: ToolRegistry | None = None,
        corpus: dict[str, str] | Path | None = None,
        max_steps: int = 10,
        **kwargs,
    ):
        super().__init__(**kwargs)
        self.registry = registry or default_registry(corpus)
        self.max_steps = max_steps
        self.conclusions: dict[str, Conclusion] = {}

    def observation(self) -> str:
        if not self.conclusions:
            return "(no tool work done yet)"
        return "\n".join(
            f"{agent} [{c.status.value}, {c.steps_used} steps]: {c.summary}"
            for agent, c in sorted(self.conclusions.items())
        )

    def evaluation_view(self) -> dict[str, Any]:
        return {
            "conclusions": {
                agent: {"status": c.status.value, "summary": c.summary}
                for agent, c in sorted(self.conclusions.items())
            }
        }


class CraftingEnv(Environment):
    """Wraps the crafting world; assignments are executed by the planner."""

    kind = "crafting"

    def __init__(
        self,
        world: CraftingWorld,
        attempt_cap: int = ATTEMPT_CAP_DEFAULT,
        **kwargs,
    ):
        super().__init__(**kwargs)
        self.world = world
        self.attempt_cap = attempt_cap
        self.last_results: dict[str, list] = {}

    def observation(self) -> str:
        rendering = self.world.observation()
        if self.last_results:
            lines = ["Sub-task results:"]
            for agent, results in sorted(self.last_results.items()):
                for r in results:
                    mark = "completed" if r.completed else f"failed ({r.reason})"
                    lines.append(f"  {agent}: {r.text} -> {mark}")
            rendering += "\n" + "\n".join(lines)
        return rendering

    def evaluation_view(self) -> dict[str, Any]:
        return {
            "inventories": {
                name: dict(sorted((+state.inventory).items()))
                for name, state in sorted(self.world.agents.items())
            },
            "subtasks": {
                agent: [r.to_dict() for r in results]
                for agent, results in sorted(self.last_results.items())
            },
        }


def execute(
    decision: GroupDecision,
    env: Environment,
    agents: list[ExpertProfile],
    provider: Provider | None = None,
    on_event: ExecEventCallback | None = None,
) -> ExecutionReport:
    """Carry out the group decision in the environment.

    Dispatches on the environment kind; the environment is the only thing
    mutated, exactly once per round.
    """
    notify = on_event or (lambda kind, agent, payload: None)

    if isinstance(env, AnswerEnv):
        env.apply_answer(decision.decision_text)
        summary = "answer recorded"
        if env.concepts:
            summary += f"; missing concepts: {sorted(env.missing) or 'none'}"
        return ExecutionReport(kind=env.kind, summary=summary, ok=True)

    if isinstance(env, CodeEnv):
        code = extract_code_block(decision.decision_text)
        if code is None:
            env.code = None
            env.report = None
            env.error = "no fenced code block in the decision"
            return ExecutionReport(kind=env.kind, summary=env.error, ok=False)
        report = env.run(code)
        return ExecutionReport(
            kind=env.kind,
            summary=f"tests {report.passed}/{report.total} passed",
            ok=report.all_passed,
            test_report=report,
        )

    if isinstance(env, ToolEnv):
        if provider is None:
            raise ConfigurationError("tool execution requires a provider")
        personas = {a.name: a.description for a in agents}
        work: list[tuple[str, str]]
        if decision.assignments:
            work = [(agent, task) for agent, task in decision.assignments.items()]
        else:
            work = [(agents[0].name, decision.decision_text)]
        for agent, task in work:
            conclusion = react_loop(
                agent,
                env.registry,
                task,
                provider,
                max_steps=env.max_steps,
                persona=personas.get(agent, "a diligent assistant"),
                on_step=lambda step, kind, payload, _a=agent: notify(
                    kind, _a, {"step": step, **payload}
                ),
            )
            env.conclusions[agent] = conclusion
        finished = sum(
            1 for c in env.conclusions.values() if c.status.value == "finished"
        )
        return ExecutionReport(
            kind=env.kind,
            summary=f"{finished}/{len(env.conclusions)} agents finished",
            ok=finished == len(env.conclusions),
            conclusions=dict(env.conclusions),
            per_agent={a: c.summary for a, c in env.conclusions.items()},
        )

    if isinstance(env, CraftingEnv):
        if not decision.assignments:
            return ExecutionReport(
                kind=env.kind,
                summary="no per-agent assignments to execute",
                ok=False,
            )
        results = execute_crafting_assignments(
            env.world,
            decision.assignments,
            attempt_cap=env.attempt_cap,
            on_action=lambda agent, action, ok, reason: notify(
                "action", agent, {"action": action, "ok": ok, "reason": reason}
            ),
        )
        env.last_results = results
        completed = sum(1 for rs in results.values() for r in rs if r.completed)
        total = sum(len(rs) for rs in results.values())
        return ExecutionReport(
            kind=env.kind,
            summary=f"{completed}/{total} sub-tasks completed",
            ok=completed == total,
            subtasks=results,
            per_agent={
                agent: "; ".join(
                    f"{r.text}: {'ok' if r.completed else 'failed'}" for r in rs
                )
                for agent, rs in results.items()
            },
        )

    raise ConfigurationError(f"no executor for environment kind {env.kind!r}")
