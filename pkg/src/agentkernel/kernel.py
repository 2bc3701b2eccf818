"""The stage loop: recruit, decide, execute, evaluate, feed back, repeat.

A run is strictly sequential. Feedback from a rejected round is threaded into
the next round's recruitment; a human-evaluated run with no feedback source
parks as awaiting_human and resumes through :meth:`Kernel.resume`.
"""

from __future__ import annotations

import logging
import threading
import uuid
from dataclasses import dataclass, field
from typing import Callable

from . import decision as decision_mod
from . import evaluation, recruitment
from .decision import GroupDecision
from .errors import ConfigurationError, ProviderError, StateConflictError
from .events import EventLog, StageEvent
from .execution import Environment, execute
from .prompts import render_prompt
from .providers import CompletionRequest, Provider
from .records import RoundRecord, RunRecord
from .recruitment import RecruitmentOutcome, RecruitmentSource
from .types import (
    EvaluatorKind,
    ExpertProfile,
    Goal,
    RunConfig,
    RunStatus,
    Setup,
    Stage,
    Structure,
    Verdict,
)

log = logging.getLogger(__name__)

EventSink = Callable[[str, StageEvent], None]

ENV_KIND_FOR_TASK = {
    "qa": "answer",
    "constrained_generation": "answer",
    "math": "answer",
    "code": "code",
    "tool": "tool",
    "crafting": "crafting",
}


@dataclass
class _RunContext:
    record: RunRecord
    config: RunConfig
    goal: Goal
    env: Environment
    provider: Provider
    log: EventLog
    manual: RecruitmentOutcome | None = None
    feedback: str | None = None
    round_index: int = 0
    stage: Stage = Stage.RECRUIT
    lock: threading.Lock = field(default_factory=threading.Lock)


class Kernel:
    """Owns run lifecycles; safe for concurrent, independent runs."""

    def __init__(
        self,
        event_sink: EventSink | None = None,
        feedback_source: evaluation.FeedbackSource | None = None,
        run_id_factory: Callable[[], str] | None = None,
    ):
        self._event_sink = event_sink
        self._feedback_source = feedback_source
        self._run_id_factory = run_id_factory or (lambda: uuid.uuid4().hex)
        self._contexts: dict[str, _RunContext] = {}
        self._registry_lock = threading.Lock()

    def get_record(self, run_id: str) -> RunRecord | None:
        ctx = self._contexts.get(run_id)
        return ctx.record if ctx else None

    def run_ids(self) -> list[str]:
        return list(self._contexts)

    def prepare(
        self,
        config: RunConfig,
        goal: Goal,
        env: Environment,
        provider: Provider,
        manual_profiles: list[ExpertProfile] | None = None,
        run_id: str | None = None,
    ) -> RunRecord:
        """Validate and register a run without executing it yet."""
        config.validate_for_goal(goal)
        expected_env = ENV_KIND_FOR_TASK[goal.task_kind.value]
        if env.kind != expected_env:
            raise ConfigurationError(
                f"environment kind {env.kind!r} does not match "
                f"{goal.task_kind.value} tasks (need {expected_env!r})"
            )
        run_id = run_id or self._run_id_factory()
        record = RunRecord(run_id=run_id, goal=goal, config=config)
        sink = None
        if self._event_sink is not None:
            sink = lambda event: self._event_sink(run_id, event)
        ctx = _RunContext(
            record=record,
            config=config,
            goal=goal,
            env=env,
            provider=provider,
            log=EventLog(sink=sink),
            manual=recruitment.manual_group(manual_profiles) if manual_profiles else None,
        )
        record.events = ctx.log.events
        with self._registry_lock:
            if run_id in self._contexts:
                raise ConfigurationError(f"run id already in use: {run_id}")
            self._contexts[run_id] = ctx
        return record

    def launch(self, record: RunRecord) -> RunRecord:
        """Execute a prepared run until it terminates or pauses."""
        ctx = self._contexts.get(record.run_id)
        if ctx is None:
            raise StateConflictError(f"unknown run: {record.run_id}")
        config, goal = ctx.config, ctx.goal
        with ctx.lock:
            ctx.log.emit(
                0,
                Stage.RECRUIT,
                "run_started",
                {
                    "goal": goal.text,
                    "task_kind": goal.task_kind.value,
                    "setup": config.setup.value,
                    "structure": config.structure.value,
                    "n_experts": config.n_experts,
                    "max_rounds": config.max_rounds,
                    "k_max": config.k_max,
                    "max_discussion_turns": config.max_discussion_turns,
                    "provider_ref": config.provider_ref,
                    "evaluator": config.evaluator_kind.value,
                },
            )
            if config.setup is Setup.COT:
                self._run_cot(ctx)
            else:
                self._advance(ctx)
        return record

    def start(
        self,
        config: RunConfig,
        goal: Goal,
        env: Environment,
        provider: Provider,
        manual_profiles: list[ExpertProfile] | None = None,
    ) -> RunRecord:
        """Run the pipeline until it terminates or pauses for a human."""
        return self.launch(
            self.prepare(config, goal, env, provider, manual_profiles=manual_profiles)
        )

    def resume(self, record: RunRecord, verdict: Verdict) -> RunRecord:
        """Inject a human verdict into a paused run and continue the loop."""
        ctx = self._contexts.get(record.run_id)
        if ctx is None:
            raise StateConflictError(f"unknown run: {record.run_id}")
        with ctx.lock:
            if ctx.record.status is not RunStatus.AWAITING_HUMAN:
                raise StateConflictError(
                    f"run {record.run_id} is {ctx.record.status.value}, not awaiting_human"
                )
            ctx.record.status = RunStatus.UNSOLVED
            self._advance(ctx, resume_verdict=verdict)
        return ctx.record

    # -- internals -------------------------------------------------------------

    def _run_cot(self, ctx: _RunContext) -> None:
        """Single prompt, single answer: no recruitment, discussion, or verdict."""
        round_record = RoundRecord(index=0)
        ctx.record.rounds.append(round_record)
        ctx.stage = Stage.EXECUTE
        try:
            messages = render_prompt("cot", {"goal": ctx.goal.text})
            ctx.log.emit(
                0,
                Stage.EXECUTE,
                "prompt",
                {"messages": [m.to_wire() for m in messages]},
                agent="solver",
            )
            reply = ctx.provider.complete(
                CompletionRequest(messages=messages, agent="solver")
            )
            ctx.log.emit(0, Stage.EXECUTE, "response", {"text": reply.content}, agent="solver")
            decision = GroupDecision(decision_text=reply.content)
            round_record.decision = decision
            profile = ExpertProfile(name="solver", description="a careful problem solver")
            report = execute(
                decision,
                ctx.env,
                [profile],
                provider=ctx.provider,
                on_event=self._execute_sink(ctx),
            )
            round_record.report = report
            ctx.log.emit(0, Stage.EXECUTE, "report", report.to_payload())
        except ProviderError as exc:
            self._abort(ctx, exc)
            return
        self._finish(ctx, RunStatus.UNSOLVED)

    def _advance(self, ctx: _RunContext, resume_verdict: Verdict | None = None) -> None:
        try:
            while ctx.round_index < ctx.config.max_rounds:
                i = ctx.round_index
                if i < len(ctx.record.rounds):
                    round_record = ctx.record.rounds[i]
                else:
                    round_record = RoundRecord(index=i)
                    ctx.record.rounds.append(round_record)

                if round_record.report is None:
                    self._run_stages(ctx, round_record)

                if round_record.verdict is None:
                    ctx.stage = Stage.EVALUATE
                    if resume_verdict is not None:
                        verdict = resume_verdict
                        resume_verdict = None
                        source = "human"
                    else:
                        verdict = self._evaluate(ctx)
                        source = ctx.config.evaluator_kind.value
                    if verdict is None:
                        ctx.record.status = RunStatus.AWAITING_HUMAN
                        ctx.log.emit(
                            i,
                            Stage.EVALUATE,
                            "awaiting_human",
                            {"observation": ctx.env.observation()},
                        )
                        return
                    round_record.verdict = verdict
                    ctx.log.emit(
                        i,
                        Stage.EVALUATE,
                        "verdict",
                        {
                            "solved": verdict.solved,
                            "feedback": verdict.feedback,
                            "score": verdict.score,
                            "source": source,
                        },
                    )

                if round_record.verdict.solved:
                    self._finish(ctx, RunStatus.SOLVED)
                    return
                ctx.feedback = round_record.verdict.feedback
                ctx.round_index += 1
            self._finish(ctx, RunStatus.UNSOLVED)
        except ProviderError as exc:
            self._abort(ctx, exc)

    def _run_stages(self, ctx: _RunContext, round_record: RoundRecord) -> None:
        i = round_record.index
        ctx.stage = Stage.RECRUIT
        outcome = self._recruit(ctx, i)
        round_record.recruitment = outcome
        profiles = outcome.profiles

        ctx.stage = Stage.DECIDE
        decision = self._decide(ctx, i, profiles)
        round_record.decision = decision
        ctx.log.emit(
            i,
            Stage.DECIDE,
            "decision",
            {
                "decision_text": decision.decision_text,
                "assignments": dict(sorted(decision.assignments.items())),
                "refinements": decision.refinements,
                "terminated_by": (
                    decision.discussion.terminated_by.value if decision.discussion else None
                ),
            },
        )

        ctx.stage = Stage.EXECUTE
        report = execute(
            decision,
            ctx.env,
            profiles,
            provider=ctx.provider,
            on_event=self._execute_sink(ctx),
        )
        round_record.report = report
        ctx.log.emit(i, Stage.EXECUTE, "report", report.to_payload())

    def _recruit(self, ctx: _RunContext, round_index: int) -> RecruitmentOutcome:
        if ctx.manual is not None:
            outcome = ctx.manual
            ctx.log.emit(
                round_index,
                Stage.RECRUIT,
                "profiles",
                {
                    "source": RecruitmentSource.MANUAL_OVERRIDE.value,
                    "profiles": [
                        {"name": p.name, "description": p.description}
                        for p in outcome.profiles
                    ],
                },
            )
            return outcome
        messages = recruitment.render_recruiter_prompt(
            ctx.goal, ctx.feedback, ctx.config.n_experts
        )
        ctx.log.emit(
            round_index,
            Stage.RECRUIT,
            "prompt",
            {"messages": [m.to_wire() for m in messages]},
            agent=recruitment.RECRUITER_AGENT,
        )
        outcome = recruitment.recruit(
            ctx.goal, ctx.feedback, ctx.config.n_experts, ctx.provider
        )
        ctx.log.emit(
            round_index,
            Stage.RECRUIT,
            "profiles",
            {
                "source": outcome.source.value,
                "raw": outcome.raw,
                "profiles": [
                    {"name": p.name, "description": p.description}
                    for p in outcome.profiles
                ],
            },
            agent=recruitment.RECRUITER_AGENT,
        )
        return outcome

    def _decide(
        self, ctx: _RunContext, round_index: int, profiles: list[ExpertProfile]
    ) -> GroupDecision:
        context = self._compose_context(ctx)
        on_turn = lambda kind, agent, text: ctx.log.emit(
            round_index, Stage.DECIDE, kind, {"text": text}, agent=agent
        )
        if len(profiles) == 1:
            return decision_mod.decide_single(
                profiles[0], context, ctx.provider, on_turn=on_turn
            )
        if ctx.config.structure is Structure.VERTICAL:
            return decision_mod.decide_vertical(
                profiles[0],
                profiles[1:],
                context,
                ctx.config.k_max,
                ctx.provider,
                on_turn=on_turn,
            )
        return decision_mod.decide_horizontal(
            profiles,
            context,
            ctx.config.max_discussion_turns,
            ctx.provider,
            require_assignments=ctx.env.kind in ("tool", "crafting"),
            on_turn=on_turn,
        )

    def _compose_context(self, ctx: _RunContext) -> str:
        parts = [f"Goal: {ctx.goal.text}"]
        observation = ctx.env.observation()
        if observation:
            parts.append(f"Environment state:\n{observation}")
        if ctx.feedback:
            parts.append(f"Feedback from the previous round:\n{ctx.feedback}")
        return "\n\n".join(parts)

    def _evaluate(self, ctx: _RunContext) -> Verdict | None:
        kind = ctx.config.evaluator_kind
        if kind is EvaluatorKind.AGENT:
            return evaluation.evaluate_agent(
                ctx.env.observation(), ctx.goal, ctx.provider
            )
        if kind is EvaluatorKind.PROGRAMMATIC:
            if ctx.env.checker is None:
                raise ConfigurationError(
                    "programmatic evaluation requires a checker on the environment"
                )
            return evaluation.evaluate_programmatic(
                ctx.env.evaluation_view(), ctx.goal, ctx.env.checker, ctx.env.gold
            )
        if self._feedback_source is None:
            return None  # park the run: awaiting_human
        return evaluation.evaluate_human(
            ctx.env.observation(), ctx.goal, self._feedback_source
        )

    def _execute_sink(self, ctx: _RunContext):
        return lambda kind, agent, payload: ctx.log.emit(
            ctx.round_index, Stage.EXECUTE, kind, payload, agent=agent
        )

    def _finish(self, ctx: _RunContext, status: RunStatus) -> None:
        ctx.record.status = status
        last_round = min(ctx.round_index, ctx.config.max_rounds - 1)
        ctx.log.emit(last_round, Stage.EVALUATE, "run_finished", {"status": status.value})

    def _abort(self, ctx: _RunContext, exc: Exception) -> None:
        log.warning("run %s aborted: %s", ctx.record.run_id, exc)
        ctx.record.status = RunStatus.ABORTED
        ctx.log.emit(
            ctx.round_index,
            ctx.stage,
            "aborted",
            {"cause": str(exc), "stage": ctx.stage.value},
        )
        ctx.log.emit(ctx.round_index, Stage.EVALUATE, "run_finished", {"status": "aborted"})


def run_pipeline(
    config: RunConfig,
    goal: Goal,
    env: Environment,
    provider: Provider,
    manual_profiles: list[ExpertProfile] | None = None,
    event_sink: EventSink | None = None,
    feedback_source: evaluation.FeedbackSource | None = None,
    run_id_factory: Callable[[], str] | None = None,
) -> RunRecord:
    """One-shot convenience wrapper around a throwaway Kernel."""
    kernel = Kernel(
        event_sink=event_sink,
        feedback_source=feedback_source,
        run_id_factory=run_id_factory,
    )
    return kernel.start(config, goal, env, provider, manual_profiles=manual_profiles)


def resume_run(kernel: Kernel, record: RunRecord, verdict: Verdict) -> RunRecord:
    """Resume a paused run on the kernel that owns it."""
    return kernel.resume(record, verdict)
