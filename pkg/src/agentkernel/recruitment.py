"""Expert recruitment: a recruiter agent turns the goal (plus any feedback
from the previous round) into a numbered list of expert personas."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum

from .errors import ParseError, ValidationError
from .prompts import render_prompt
from .providers import ChatMessage, CompletionRequest, Provider
from .types import ExpertProfile, Goal

RECRUITER_AGENT = "recruiter"

# Accepted grammar: numbered "N. Name: Description" lines, nothing else.
_PROFILE_LINE = re.compile(r"^\s*\d+\.\s*(?P<name>[^:]+?)\s*:\s*(?P<description>.+?)\s*$")


class RecruitmentSource(str, Enum):
    GENERATED = "generated"
    MANUAL_OVERRIDE = "manual_override"


@dataclass
class RecruitmentOutcome:
    profiles: list[ExpertProfile]
    raw: str = ""
    source: RecruitmentSource = RecruitmentSource.GENERATED


def parse_profiles(text: str, n_experts: int) -> list[ExpertProfile]:
    """Parse a recruiter reply into exactly ``n_experts`` profiles.

    Raises ParseError when any non-blank line falls outside the grammar or
    the count does not match. Duplicate names are kept unique by suffixing
    "-2", "-3", ...
    """
    profiles: list[ExpertProfile] = []
    seen: dict[str, int] = {}
    for line in text.splitlines():
        if not line.strip():
            continue
        m = _PROFILE_LINE.match(line)
        if m is None:
            raise ParseError(f"line does not match the expert-list grammar: {line!r}", raw=text)
        name = m.group("name").strip()
        if name in seen:
            seen[name] += 1
            name = f"{name}-{seen[m.group('name').strip()]}"
        else:
            seen[name] = 1
        profiles.append(
            ExpertProfile(name=name, description=m.group("description"), index=len(profiles))
        )
    if len(profiles) != n_experts:
        raise ParseError(
            f"expected {n_experts} experts, parsed {len(profiles)}", raw=text
        )
    return profiles


def render_recruiter_prompt(
    goal: Goal, feedback: str | None, n_experts: int
) -> list[ChatMessage]:
    if feedback:
        return render_prompt(
            "recruiter_feedback",
            {"goal": goal.text, "feedback": feedback, "n_experts": str(n_experts)},
        )
    return render_prompt("recruiter", {"goal": goal.text, "n_experts": str(n_experts)})


def recruit(
    goal: Goal,
    feedback: str | None,
    n_experts: int,
    recruiter_provider: Provider,
) -> RecruitmentOutcome:
    """Generate an expert group for the goal.

    An unparsable reply earns one re-ask with a format reminder; a second
    failure is a hard ParseError carrying the raw text.
    """
    if n_experts < 1:
        raise ValidationError("n_experts must be >= 1")
    messages = render_recruiter_prompt(goal, feedback, n_experts)
    request = CompletionRequest(messages=messages, agent=RECRUITER_AGENT)
    reply = recruiter_provider.complete(request)
    try:
        profiles = parse_profiles(reply.content, n_experts)
    except ParseError:
        reminder = ChatMessage(
            role="user",
            content=(
                f"Your reply did not match the required format. Reply with exactly "
                f"{n_experts} lines, each formatted as 'N. Name: Description', and "
                f"nothing else."
            ),
        )
        retry_request = CompletionRequest(
            messages=messages + [reply, reminder], agent=RECRUITER_AGENT
        )
        reply = recruiter_provider.complete(retry_request)
        profiles = parse_profiles(reply.content, n_experts)
    return RecruitmentOutcome(profiles=profiles, raw=reply.content)


def manual_group(profiles: list[ExpertProfile]) -> RecruitmentOutcome:
    """Bypass generated recruitment with a fixed group used every round."""
    if not profiles:
        raise ValidationError("manual group must contain at least one profile")
    names = [p.name for p in profiles]
    if len(set(names)) != len(names):
        raise ValidationError(f"duplicate expert names: {sorted(names)}")
    indexed = [
        ExpertProfile(name=p.name, description=p.description, index=i)
        for i, p in enumerate(profiles)
    ]
    return RecruitmentOutcome(profiles=indexed, source=RecruitmentSource.MANUAL_OVERRIDE)
