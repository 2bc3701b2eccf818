#!/usr/bin/env python3
"""Record the fixture transcripts the console tests replay: a finished
two-round run, and a human-evaluated run that pauses twice."""

import sys
from pathlib import Path

from agentkernel import (
    AnswerEnv,
    Goal,
    Kernel,
    RunConfig,
    ScriptedProvider,
    Verdict,
    run_pipeline,
)
from agentkernel.persistence import InMemoryEventStore

OUT = Path(__file__).resolve().parents[1] / "frontend" / "tests" / "fixtures"


def write(out_dir: Path, name: str, store: InMemoryEventStore, run_id: str) -> None:
    path = out_dir / name
    events = store.read(run_id)
    path.write_text("".join(e.to_line() + "\n" for e in events), encoding="utf-8")
    print(f"wrote {path} ({len(events)} events)")


def finished_two_round(out_dir: Path) -> None:
    entries = [
        ("recruiter", "1. Writer: drafts prose\n2. Editor: trims prose"),
        ("Writer", "draft one of the announcement"),
        ("Editor", "REJECT\ntoo wordy, cut the middle"),
        ("Writer", "tighter draft of the announcement"),
        ("Editor", "APPROVE"),
        ("evaluator", "UNSOLVED\nmention the release date"),
        ("recruiter", "1. Writer: drafts prose\n2. Editor: trims prose"),
        ("Writer", "final draft with the release date"),
        ("Editor", "APPROVE"),
        ("evaluator", "SOLVED"),
    ]
    store = InMemoryEventStore()
    record = run_pipeline(
        RunConfig(setup="group", n_experts=2, structure="vertical", max_rounds=3),
        Goal(text="Write the release announcement"),
        AnswerEnv(),
        ScriptedProvider(entries),
        event_sink=store.append,
        run_id_factory=lambda: "fixture-2round",
    )
    assert record.status.value == "solved" and len(record.rounds) == 2
    write(out_dir, "transcript_2round.jsonl", store, record.run_id)


def paused_then_resumed(out_dir: Path) -> None:
    entries = [
        ("recruiter", "1. Builder: assembles the feature"),
        ("Builder", "first cut of the feature"),
        ("recruiter", "1. Builder: assembles the feature"),
        ("Builder", "feature with keyboard support"),
    ]
    store = InMemoryEventStore()
    kernel = Kernel(
        event_sink=store.append, run_id_factory=lambda: "fixture-paused"
    )
    record = kernel.start(
        RunConfig(setup="solo", max_rounds=3, evaluator_kind="human"),
        Goal(text="Ship the settings page"),
        AnswerEnv(),
        ScriptedProvider(entries),
    )
    assert record.status.value == "awaiting_human"
    record = kernel.resume(record, Verdict(solved=False, feedback="add keyboard support"))
    assert record.status.value == "awaiting_human" and len(record.rounds) == 2
    record = kernel.resume(record, Verdict(solved=True, feedback=""))
    assert record.status.value == "solved"
    write(out_dir, "transcript_paused.jsonl", store, record.run_id)


def main():
    out_dir = Path(sys.argv[1]) if len(sys.argv) > 1 else OUT
    out_dir.mkdir(parents=True, exist_ok=True)
    finished_two_round(out_dir)
    paused_then_resumed(out_dir)


if __name__ == "__main__":
    main()
