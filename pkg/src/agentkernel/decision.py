"""Collaborative decision-making.

Two structures: vertical (one solver proposes, reviewers critique, the solver
refines until all approve or the refinement cap is hit) and horizontal
(round-robin discussion ended by a terminal [END] token from every member,
then a summarizer distills one assignment per member).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

from .errors import ParseError, ValidationError
from .prompts import render_prompt
from .providers import ChatMessage, CompletionRequest, Provider
from .types import ExpertProfile

END_TOKEN = "[END]"
SUMMARIZER_AGENT = "summarizer"

TurnCallback = Callable[[str, str, str], None]  # (event kind, agent, text)


class Termination(str, Enum):
    CONSENSUS = "consensus"
    TURN_CAP = "turn_cap"
    REFINEMENT_CAP = "refinement_cap"


@dataclass
class Review:
    reviewer: str
    approved: bool
    critique: str = ""

    def __post_init__(self):
        if not self.approved and not self.critique.strip():
            raise ValidationError("a rejecting review requires a critique")


@dataclass
class Discussion:
    turns: list[tuple[str, str]] = field(default_factory=list)
    structure: str = "horizontal"
    terminated_by: Termination = Termination.CONSENSUS


@dataclass
class GroupDecision:
    decision_text: str
    assignments: dict[str, str] = field(default_factory=dict)
    refinements: int = 0
    discussion: Discussion | None = None


def parse_review(reviewer: str, text: str) -> Review:
    """First line APPROVE or REJECT; the remainder is the critique.

    Raises ParseError when the marker is missing or a rejection carries no
    critique (callers re-ask once, then fall back to rejection).
    """
    lines = text.strip().splitlines()
    first = lines[0].strip() if lines else ""
    rest = "\n".join(lines[1:]).strip()
    if first == "APPROVE":
        return Review(reviewer=reviewer, approved=True, critique=rest)
    if first == "REJECT" and rest:
        return Review(reviewer=reviewer, approved=False, critique=rest)
    raise ParseError(f"review from {reviewer} lacks a usable APPROVE/REJECT marker", raw=text)


def _ask(provider: Provider, agent: str, messages: list[ChatMessage]) -> str:
    request = CompletionRequest(messages=messages, agent=agent)
    return provider.complete(request).content


def _collect_review(
    provider: Provider, reviewer: ExpertProfile, context: str, proposal: str
) -> Review:
    messages = render_prompt(
        "reviewer",
        {"persona": reviewer.description, "context": context, "proposal": proposal},
    )
    text = _ask(provider, reviewer.name, messages)
    try:
        return parse_review(reviewer.name, text)
    except ParseError:
        reminder = ChatMessage(
            role="user",
            content=(
                "Your reply must start with APPROVE or REJECT on the first line; "
                "a REJECT must be followed by your critique."
            ),
        )
        retry = messages + [ChatMessage(role="assistant", content=text), reminder]
        second = _ask(provider, reviewer.name, retry)
        try:
            return parse_review(reviewer.name, second)
        except ParseError:
            # Fail-safe: treat as rejection, raw text as the critique.
            return Review(
                reviewer=reviewer.name,
                approved=False,
                critique=second.strip() or text.strip() or "unparsable review",
            )


def decide_vertical(
    solver: ExpertProfile,
    reviewers: list[ExpertProfile],
    context: str,
    k_max: int,
    provider: Provider,
    on_turn: TurnCallback | None = None,
) -> GroupDecision:
    """Solver proposes, reviewers critique, solver refines.

    Stops at unanimous approval or after k_max refinements; the decision is
    always the solver's latest proposal.
    """
    if not reviewers:
        raise ValidationError("vertical structure needs at least one reviewer")
    if k_max < 1:
        raise ValidationError("k_max must be >= 1")
    notify = on_turn or (lambda kind, agent, text: None)
    discussion = Discussion(structure="vertical")

    proposal = _ask(
        provider,
        solver.name,
        render_prompt("solver", {"persona": solver.description, "context": context}),
    )
    discussion.turns.append((solver.name, proposal))
    notify("proposal", solver.name, proposal)

    k = 0
    while True:
        if k >= k_max:
            discussion.terminated_by = Termination.REFINEMENT_CAP
            break
        reviews = [_collect_review(provider, r, context, proposal) for r in reviewers]
        for review in reviews:
            marker = "APPROVE" if review.approved else "REJECT"
            text = f"{marker}\n{review.critique}".strip()
            discussion.turns.append((review.reviewer, text))
            notify("review", review.reviewer, text)
        if all(r.approved for r in reviews):
            discussion.terminated_by = Termination.CONSENSUS
            break
        critiques = "\n".join(
            f"- {r.reviewer}: {r.critique}" for r in reviews if not r.approved
        )
        proposal = _ask(
            provider,
            solver.name,
            render_prompt(
                "solver_refine",
                {
                    "persona": solver.description,
                    "context": context,
                    "proposal": proposal,
                    "critiques": critiques,
                },
            ),
        )
        k += 1
        discussion.turns.append((solver.name, proposal))
        notify("proposal", solver.name, proposal)

    return GroupDecision(
        decision_text=proposal, assignments={}, refinements=k, discussion=discussion
    )


def decide_single(
    agent: ExpertProfile,
    context: str,
    provider: Provider,
    on_turn: TurnCallback | None = None,
) -> GroupDecision:
    """Degenerate group of one: the lone agent's proposal is the decision."""
    notify = on_turn or (lambda kind, agent, text: None)
    proposal = _ask(
        provider,
        agent.name,
        render_prompt("solver", {"persona": agent.description, "context": context}),
    )
    notify("proposal", agent.name, proposal)
    discussion = Discussion(
        structure="vertical",
        turns=[(agent.name, proposal)],
        terminated_by=Termination.CONSENSUS,
    )
    return GroupDecision(decision_text=proposal, refinements=0, discussion=discussion)


def detect_consensus(turns: list[tuple[str, str]], agents: list[str]) -> bool:
    """True iff every agent has spoken and each one's latest turn ends with
    the [END] token (after trailing-whitespace strip)."""
    latest: dict[str, str] = {}
    for agent, text in turns:
        latest[agent] = text
    return all(
        agent in latest and latest[agent].rstrip().endswith(END_TOKEN) for agent in agents
    )


def _render_transcript(turns: list[tuple[str, str]]) -> str:
    if not turns:
        return "(no turns yet)"
    return "\n".join(f"{agent}: {text}" for agent, text in turns)


def parse_assignments(text: str, agent_names: list[str]) -> dict[str, str]:
    """Extract one "Name: task" assignment per agent from summarizer output.

    Lines are split on newlines; semicolons start a new assignment only when
    followed by a known agent name, so multi-part tasks keep their inner
    structure. Raises ParseError if any agent is uncovered or covered twice.
    """
    assignments: dict[str, str] = {}
    known = set(agent_names)

    def feed(name: str, task: str) -> None:
        if name in assignments:
            raise ParseError(f"agent {name} assigned more than once", raw=text)
        assignments[name] = task.strip()

    for line in text.splitlines():
        current: str | None = None
        buffer: list[str] = []
        for segment in line.split(";"):
            head, sep, tail = segment.partition(":")
            name = head.strip().lstrip("-*0123456789. ").strip()
            if sep and name in known:
                if current is not None:
                    feed(current, ";".join(buffer))
                current = name
                buffer = [tail]
            elif current is not None:
                buffer.append(segment)
        if current is not None:
            feed(current, ";".join(buffer))

    missing = [name for name in agent_names if name not in assignments or not assignments[name]]
    if missing:
        raise ParseError(f"no assignment for: {', '.join(missing)}", raw=text)
    return {name: assignments[name] for name in agent_names}


def decide_horizontal(
    agents: list[ExpertProfile],
    context: str,
    max_discussion_turns: int,
    provider: Provider,
    require_assignments: bool = True,
    on_turn: TurnCallback | None = None,
) -> GroupDecision:
    """Round-robin discussion followed by summarizer-distilled assignments.

    Discussion ends as soon as every agent's latest turn ends with [END], or
    when the turn cap is reached; the summarizer is invoked exactly once
    either way.
    """
    if len(agents) < 2:
        raise ValidationError("horizontal structure needs at least two agents")
    if max_discussion_turns < 1:
        raise ValidationError("max_discussion_turns must be >= 1")
    notify = on_turn or (lambda kind, agent, text: None)
    names = [a.name for a in agents]
    discussion = Discussion(structure="horizontal", terminated_by=Termination.TURN_CAP)

    for turn_index in range(max_discussion_turns):
        speaker = agents[turn_index % len(agents)]
        messages = render_prompt(
            "discussant",
            {
                "persona": speaker.description,
                "context": context,
                "transcript": _render_transcript(discussion.turns),
                "agent": speaker.name,
            },
        )
        text = _ask(provider, speaker.name, messages)
        discussion.turns.append((speaker.name, text))
        notify("turn", speaker.name, text)
        if detect_consensus(discussion.turns, names):
            discussion.terminated_by = Termination.CONSENSUS
            break

    summary_messages = render_prompt(
        "summarizer",
        {
            "context": context,
            "transcript": _render_transcript(discussion.turns),
            "agents": ", ".join(names),
        },
    )
    summary = _ask(provider, SUMMARIZER_AGENT, summary_messages)
    notify("summary", SUMMARIZER_AGENT, summary)

    assignments: dict[str, str] = {}
    if require_assignments:
        try:
            assignments = parse_assignments(summary, names)
        except ParseError as exc:
            reminder = ChatMessage(
                role="user",
                content=(
                    f"Your reply was incomplete ({exc}). Reply with exactly one "
                    f"'Name: task' line for each of: {', '.join(names)}."
                ),
            )
            retry = summary_messages + [ChatMessage(role="assistant", content=summary), reminder]
            summary = _ask(provider, SUMMARIZER_AGENT, retry)
            notify("summary", SUMMARIZER_AGENT, summary)
            assignments = parse_assignments(summary, names)
    else:
        try:
            assignments = parse_assignments(summary, names)
        except ParseError:
            assignments = {}

    return GroupDecision(
        decision_text=summary,
        assignments=assignments,
        refinements=0,
        discussion=discussion,
    )
