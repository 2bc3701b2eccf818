"""Transcript persistence and replay.

Transcripts are JSON Lines: one stage event per line, UTF-8, canonical key
order. Replay reconstructs a RunRecord purely from the persisted events.
"""

from __future__ import annotations

import threading
from pathlib import Path
from typing import Iterable

from .decision import Discussion, GroupDecision, Termination
from .errors import IntegrityError
from .events import StageEvent, check_sequence
from .execution import Conclusion, ConclusionStatus, ExecutionReport, SubTaskResult, TestReport
from .records import RoundRecord, RunRecord
from .recruitment import RecruitmentOutcome, RecruitmentSource
from .types import ExpertProfile, Goal, RunConfig, RunStatus, TaskKind, Verdict

_TURN_KINDS = {"proposal", "review", "turn"}


class JsonlEventStore:
    """One ``<run_id>.jsonl`` file per run under a root directory."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def path_for(self, run_id: str) -> Path:
        return self.root / f"{run_id}.jsonl"

    def append(self, run_id: str, event: StageEvent) -> None:
        line = event.to_line() + "\n"
        with self._lock:
            with open(self.path_for(run_id), "a", encoding="utf-8") as fh:
                fh.write(line)

    def read(self, run_id: str) -> list[StageEvent]:
        path = self.path_for(run_id)
        if not path.is_file():
            raise IntegrityError(f"no transcript for run {run_id}")
        events = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    events.append(StageEvent.from_line(line))
        return events

    def run_ids(self) -> list[str]:
        return sorted(p.stem for p in self.root.glob("*.jsonl"))


class InMemoryEventStore:
    """Append-only per-run event lists with a broadcast condition, so live
    subscribers can block until the next event arrives."""

    def __init__(self):
        self._events: dict[str, list[StageEvent]] = {}
        self._closed: set[str] = set()
        self._cond = threading.Condition()

    def append(self, run_id: str, event: StageEvent) -> None:
        with self._cond:
            self._events.setdefault(run_id, []).append(event)
            self._cond.notify_all()

    def close(self, run_id: str) -> None:
        with self._cond:
            self._closed.add(run_id)
            self._cond.notify_all()

    def is_closed(self, run_id: str) -> bool:
        with self._cond:
            return run_id in self._closed

    def read(self, run_id: str) -> list[StageEvent]:
        with self._cond:
            return list(self._events.get(run_id, []))

    def read_from(self, run_id: str, from_seq: int) -> list[StageEvent]:
        with self._cond:
            return [e for e in self._events.get(run_id, []) if e.seq >= from_seq]

    def wait_for_more(self, run_id: str, next_seq: int, timeout: float = 0.5) -> bool:
        """Block until an event with seq >= next_seq exists or the run closes."""
        with self._cond:
            def ready() -> bool:
                events = self._events.get(run_id, [])
                return (events and events[-1].seq >= next_seq) or run_id in self._closed

            return self._cond.wait_for(ready, timeout=timeout)

    def known(self, run_id: str) -> bool:
        with self._cond:
            return run_id in self._events


def tee_sinks(*sinks):
    """Combine several event sinks into one."""

    def sink(run_id: str, event: StageEvent) -> None:
        for s in sinks:
            s(run_id, event)

    return sink


# -- replay -----------------------------------------------------------------------


def replay_events(run_id: str, events: Iterable[StageEvent]) -> RunRecord:
    """Rebuild a RunRecord from its transcript alone."""
    events = list(events)
    if not events:
        raise IntegrityError(f"empty transcript for run {run_id}")
    check_sequence(events)
    first = events[0]
    if first.kind != "run_started":
        raise IntegrityError("transcript does not begin with run_started", seq=first.seq)
    meta = first.payload
    goal = Goal(text=meta["goal"], task_kind=TaskKind(meta["task_kind"]))
    config = RunConfig(
        setup=meta["setup"],
        n_experts=meta["n_experts"],
        structure=meta["structure"],
        max_rounds=meta["max_rounds"],
        k_max=meta.get("k_max", 3),
        max_discussion_turns=meta.get("max_discussion_turns"),
        provider_ref=meta.get("provider_ref", "default"),
        evaluator_kind=meta["evaluator"],
    )
    record = RunRecord(run_id=run_id, goal=goal, config=config, events=events)

    rounds: dict[int, RoundRecord] = {}
    turns: dict[int, list[tuple[str, str]]] = {}
    status = RunStatus.UNSOLVED
    for event in events:
        round_record = rounds.setdefault(event.round, RoundRecord(index=event.round))
        kind = event.kind
        if kind == "profiles":
            profiles = [
                ExpertProfile(name=p["name"], description=p["description"], index=i)
                for i, p in enumerate(event.payload["profiles"])
            ]
            round_record.recruitment = RecruitmentOutcome(
                profiles=profiles,
                raw=event.payload.get("raw", ""),
                source=RecruitmentSource(event.payload["source"]),
            )
        elif kind in _TURN_KINDS:
            turns.setdefault(event.round, []).append((event.agent, event.payload["text"]))
        elif kind == "decision":
            payload = event.payload
            discussion = Discussion(
                turns=turns.get(event.round, []),
                structure=config.structure.value,
                terminated_by=(
                    Termination(payload["terminated_by"])
                    if payload.get("terminated_by")
                    else Termination.CONSENSUS
                ),
            )
            round_record.decision = GroupDecision(
                decision_text=payload["decision_text"],
                assignments=dict(payload.get("assignments", {})),
                refinements=payload.get("refinements", 0),
                discussion=discussion,
            )
        elif kind == "response" and event.stage.value == "execute":
            # CoT runs record the single answer as an execute-stage response.
            round_record.decision = GroupDecision(decision_text=event.payload["text"])
        elif kind == "report":
            round_record.report = _report_from_payload(event.payload)
        elif kind == "verdict":
            payload = event.payload
            round_record.verdict = Verdict(
                solved=payload["solved"],
                feedback=payload.get("feedback", ""),
                score=payload.get("score"),
            )
        elif kind == "awaiting_human":
            status = RunStatus.AWAITING_HUMAN
        elif kind == "run_finished":
            status = RunStatus(event.payload["status"])

    record.rounds = [rounds[i] for i in sorted(rounds)]
    record.status = status
    return record


def _report_from_payload(payload: dict) -> ExecutionReport:
    report = ExecutionReport(
        kind=payload["kind"],
        summary=payload["summary"],
        ok=payload.get("ok", True),
        per_agent=dict(payload.get("per_agent", {})),
    )
    if payload.get("test_report"):
        report.test_report = TestReport.from_dict(payload["test_report"])
    for agent, c in payload.get("conclusions", {}).items():
        report.conclusions[agent] = Conclusion(
            status=ConclusionStatus(c["status"]),
            summary=c["summary"],
            steps_used=c["steps_used"],
        )
    for agent, results in payload.get("subtasks", {}).items():
        report.subtasks[agent] = [
            SubTaskResult(
                text=r["text"],
                completed=r["completed"],
                attempts=r["attempts"],
                reason=r.get("reason", ""),
            )
            for r in results
        ]
    return report


def replay(store: JsonlEventStore, run_id: str) -> RunRecord:
    """Reconstruct a run from the persisted transcript."""
    return replay_events(run_id, store.read(run_id))
