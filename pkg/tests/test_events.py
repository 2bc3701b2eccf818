import pytest
from hypothesis import given
from hypothesis import strategies as st

from agentkernel.errors import IntegrityError
from agentkernel.events import (
    EventLog,
    StageEvent,
    canonical_json,
    check_sequence,
    transcript_fingerprint,
)
from agentkernel.types import Stage


def test_event_line_round_trip():
    event = StageEvent(seq=0, round=0, stage=Stage.RECRUIT, kind="prompt", payload={"k": "v"})
    parsed = StageEvent.from_line(event.to_line())
    assert parsed.seq == 0 and parsed.stage is Stage.RECRUIT and parsed.payload == {"k": "v"}


def test_canonical_json_sorts_keys():
    assert canonical_json({"b": 1, "a": 2}) == '{"a":2,"b":1}'


def test_fingerprint_excludes_timestamps():
    a = StageEvent(seq=0, round=0, stage=Stage.RECRUIT, kind="x", ts="2020-01-01T00:00:00")
    b = StageEvent(seq=0, round=0, stage=Stage.RECRUIT, kind="x", ts="2021-06-15T12:34:56")
    assert transcript_fingerprint([a]) == transcript_fingerprint([b])
    assert a.to_line() != b.to_line()


def test_log_enforces_stage_order_within_round():
    log = EventLog()
    log.emit(0, Stage.DECIDE, "turn")
    with pytest.raises(IntegrityError):
        log.emit(0, Stage.RECRUIT, "late-prompt")


def test_log_allows_new_round_to_restart_stages():
    log = EventLog()
    log.emit(0, Stage.EVALUATE, "verdict")
    log.emit(1, Stage.RECRUIT, "prompt")
    assert [e.seq for e in log.events] == [0, 1]


def test_check_sequence_names_the_gap():
    events = [
        StageEvent(seq=0, round=0, stage=Stage.RECRUIT, kind="a"),
        StageEvent(seq=2, round=0, stage=Stage.DECIDE, kind="b"),
    ]
    with pytest.raises(IntegrityError) as excinfo:
        check_sequence(events)
    assert excinfo.value.seq == 2
    assert "expected seq 1" in str(excinfo.value)


def test_malformed_line_is_integrity_error():
    with pytest.raises(IntegrityError):
        StageEvent.from_line("{not json")
    with pytest.raises(IntegrityError):
        StageEvent.from_line('{"seq": 0}')


@given(
    st.lists(
        st.sampled_from([Stage.RECRUIT, Stage.DECIDE, Stage.EXECUTE, Stage.EVALUATE]),
        min_size=1,
        max_size=30,
    )
)
def test_emitted_sequences_always_check_out(stages):
    """Whatever monotone stage walk the log accepts must satisfy check_sequence."""
    log = EventLog()
    round_index = 0
    last_order = 0
    order = {Stage.RECRUIT: 0, Stage.DECIDE: 1, Stage.EXECUTE: 2, Stage.EVALUATE: 3}
    for stage in stages:
        if order[stage] < last_order:
            round_index += 1
        last_order = order[stage]
        log.emit(round_index, stage, "k")
    check_sequence(log.events)
