"""Run and round records: the replayable account of one pipeline run."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from .decision import GroupDecision
from .events import StageEvent, check_sequence, transcript_fingerprint
from .execution import ExecutionReport
from .recruitment import RecruitmentOutcome
from .types import Goal, RunConfig, RunStatus, Verdict


@dataclass
class RoundRecord:
    index: int
    recruitment: RecruitmentOutcome | None = None
    decision: GroupDecision | None = None
    report: ExecutionReport | None = None
    verdict: Verdict | None = None


@dataclass
class RunRecord:
    run_id: str
    goal: Goal
    config: RunConfig
    rounds: list[RoundRecord] = field(default_factory=list)
    status: RunStatus = RunStatus.UNSOLVED
    events: list[StageEvent] = field(default_factory=list)

    def fingerprint(self) -> str:
        """Timestamp-free transcript rendering for determinism checks."""
        return transcript_fingerprint(self.events)

    def to_summary(self) -> dict[str, Any]:
        return {
            "run_id": self.run_id,
            "goal": self.goal.text,
            "task_kind": self.goal.task_kind.value,
            "status": self.status.value,
            "rounds": len(self.rounds),
        }

    def check_invariants(self) -> None:
        """Raise if the record violates its structural invariants."""
        if len(self.rounds) > self.config.max_rounds:
            raise AssertionError("rounds exceed max_rounds")
        check_sequence(self.events)
        last_verdict = self.rounds[-1].verdict if self.rounds else None
        is_solved = last_verdict is not None and last_verdict.solved
        if (self.status is RunStatus.SOLVED) != is_solved:
            raise AssertionError("status=solved must match the last round's verdict")


def record_projection(record: RunRecord) -> dict[str, Any]:
    """Timestamp-free structural view of a record, used to compare a replayed
    record against the original."""
    rounds = []
    for r in record.rounds:
        decision = None
        if r.decision is not None:
            decision = {
                "decision_text": r.decision.decision_text,
                "assignments": dict(sorted(r.decision.assignments.items())),
                "refinements": r.decision.refinements,
                "terminated_by": (
                    r.decision.discussion.terminated_by.value
                    if r.decision.discussion
                    else None
                ),
                "turns": list(r.decision.discussion.turns) if r.decision.discussion else [],
            }
        recruitment = None
        if r.recruitment is not None:
            recruitment = {
                "source": r.recruitment.source.value,
                "profiles": [
                    {"name": p.name, "description": p.description}
                    for p in r.recruitment.profiles
                ],
            }
        verdict = None
        if r.verdict is not None:
            verdict = {
                "solved": r.verdict.solved,
                "feedback": r.verdict.feedback,
                "score": r.verdict.score,
            }
        rounds.append(
            {
                "index": r.index,
                "recruitment": recruitment,
                "decision": decision,
                "report": r.report.to_payload() if r.report else None,
                "verdict": verdict,
            }
        )
    return {
        "run_id": record.run_id,
        "goal": record.goal.text,
        "task_kind": record.goal.task_kind.value,
        "status": record.status.value,
        "rounds": rounds,
        "events": record.fingerprint(),
    }
