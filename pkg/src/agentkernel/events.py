"""Stage events: the append-only transcript a run leaves behind.

Events serialize to canonical JSON (sorted keys, compact separators) so two
identical runs produce byte-identical lines once the timestamp is stripped.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Any

from .errors import IntegrityError
from .types import STAGE_ORDER, Stage


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


@dataclass
class StageEvent:
    seq: int
    round: int
    stage: Stage
    kind: str
    payload: dict[str, Any] = field(default_factory=dict)
    agent: str | None = None
    ts: str = field(default_factory=_now)

    def to_dict(self, include_ts: bool = True) -> dict[str, Any]:
        d: dict[str, Any] = {
            "seq": self.seq,
            "round": self.round,
            "stage": self.stage.value,
            "kind": self.kind,
            "agent": self.agent,
            "payload": self.payload,
        }
        if include_ts:
            d["ts"] = self.ts
        return d

    def to_line(self, include_ts: bool = True) -> str:
        return canonical_json(self.to_dict(include_ts=include_ts))

    @classmethod
    def from_line(cls, line: str) -> "StageEvent":
        try:
            d = json.loads(line)
        except json.JSONDecodeError as exc:
            raise IntegrityError(f"unparsable event line: {exc}") from exc
        try:
            return cls(
                seq=d["seq"],
                round=d["round"],
                stage=Stage(d["stage"]),
                kind=d["kind"],
                payload=d.get("payload", {}),
                agent=d.get("agent"),
                ts=d.get("ts", ""),
            )
        except (KeyError, ValueError) as exc:
            raise IntegrityError(f"malformed event line: {exc}", seq=d.get("seq")) from exc


def canonical_json(obj: Any) -> str:
    """Deterministic JSON: sorted keys, compact separators, UTF-8 preserved."""
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


class EventLog:
    """Builds a run's event sequence, enforcing numbering and stage order."""

    def __init__(self, sink=None):
        self.events: list[StageEvent] = []
        self._sink = sink

    def emit(
        self,
        round_index: int,
        stage: Stage,
        kind: str,
        payload: dict[str, Any] | None = None,
        agent: str | None = None,
    ) -> StageEvent:
        event = StageEvent(
            seq=len(self.events),
            round=round_index,
            stage=stage,
            kind=kind,
            payload=payload or {},
            agent=agent,
        )
        if self.events:
            last = self.events[-1]
            if event.round < last.round:
                raise IntegrityError("round index regressed", seq=event.seq)
            if event.round == last.round and (
                STAGE_ORDER[event.stage] < STAGE_ORDER[last.stage]
            ):
                raise IntegrityError(
                    f"stage {event.stage.value} after {last.stage.value} in round {event.round}",
                    seq=event.seq,
                )
        self.events.append(event)
        if self._sink is not None:
            self._sink(event)
        return event


def check_sequence(events: list[StageEvent]) -> None:
    """Raise IntegrityError on the first gap, duplicate, or stage regression."""
    for i, event in enumerate(events):
        if event.seq != i:
            raise IntegrityError(
                f"sequence gap: expected seq {i}, found {event.seq}", seq=event.seq
            )
    by_round: dict[int, int] = {}
    prev_round = -1
    for event in events:
        if event.round < prev_round:
            raise IntegrityError("round index regressed", seq=event.seq)
        prev_round = event.round
        order = STAGE_ORDER[event.stage]
        if order < by_round.get(event.round, 0):
            raise IntegrityError(
                f"stage {event.stage.value} out of order in round {event.round}",
                seq=event.seq,
            )
        by_round[event.round] = order


def transcript_fingerprint(events: list[StageEvent]) -> str:
    """Timestamp-free rendering used for determinism comparisons."""
    return "\n".join(e.to_line(include_ts=False) for e in events)
