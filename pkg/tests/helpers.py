"""Script builders that mirror the engine's provider-call order exactly.

Used by the determinism and protocol tests: given a random seed, build a
scripted provider plus the expected shape of the run it drives.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from agentkernel import ScriptedProvider
from agentkernel.types import EvaluatorKind, Goal, RunConfig, Setup, Structure, TaskKind


@dataclass
class VerticalPattern:
    """One decide_vertical exchange: which review iteration approves."""

    n_reviewers: int
    k_max: int
    approve_at: int | None  # review iteration with unanimous approval, or None
    rejecting: list[list[int]] = field(default_factory=list)  # reviewer indexes per iter

    @property
    def review_iterations(self) -> int:
        return self.k_max if self.approve_at is None else self.approve_at + 1

    @property
    def expected_refinements(self) -> int:
        return self.k_max if self.approve_at is None else self.approve_at

    @property
    def expected_decision(self) -> str:
        return f"proposal-{self.expected_refinements}"


def random_vertical_pattern(rng: random.Random) -> VerticalPattern:
    n_reviewers = rng.randint(1, 3)
    k_max = rng.randint(1, 4)
    approve_at = rng.choice([None] + list(range(k_max)))
    iterations = k_max if approve_at is None else approve_at + 1
    rejecting = []
    for j in range(iterations):
        if approve_at is not None and j == approve_at:
            rejecting.append([])
        else:
            count = rng.randint(1, n_reviewers)
            rejecting.append(sorted(rng.sample(range(n_reviewers), count)))
    return VerticalPattern(
        n_reviewers=n_reviewers, k_max=k_max, approve_at=approve_at, rejecting=rejecting
    )


def vertical_script(pattern: VerticalPattern) -> list[tuple[str, str]]:
    """Entries keyed by agent name, in the exact order the engine asks."""
    entries: list[tuple[str, str]] = [("solver-agent", "proposal-0")]
    for j in range(pattern.review_iterations):
        for r in range(pattern.n_reviewers):
            name = f"reviewer-{r}"
            if r in pattern.rejecting[j]:
                entries.append((name, f"REJECT\ncritique-{j}-{r}"))
            else:
                entries.append((name, "APPROVE"))
        if pattern.rejecting[j]:
            entries.append(("solver-agent", f"proposal-{j + 1}"))
    return entries


@dataclass
class HorizontalPattern:
    agents: list[str]
    cap: int
    texts: list[str]  # one candidate utterance per potential turn, up to cap

    def simulate(self) -> tuple[int, bool]:
        """Independent replay of the stop rule: (turns taken, by_consensus)."""
        latest: dict[str, str] = {}
        for i in range(self.cap):
            speaker = self.agents[i % len(self.agents)]
            latest[speaker] = self.texts[i]
            done = all(
                a in latest and latest[a].rstrip().endswith("[END]") for a in self.agents
            )
            if done:
                return i + 1, True
        return self.cap, False


def random_horizontal_pattern(rng: random.Random) -> HorizontalPattern:
    n = rng.randint(2, 4)
    agents = [f"member-{i}" for i in range(n)]
    cycles = rng.randint(1, 3)
    cap = cycles * n + rng.randint(0, n - 1)
    texts = []
    for i in range(cap):
        roll = rng.random()
        if roll < 0.45:
            texts.append(f"turn-{i} agreed [END]")
        elif roll < 0.60:
            texts.append(f"turn-{i} [END] but wait, more to say")  # non-terminal token
        else:
            texts.append(f"turn-{i} still thinking")
    return HorizontalPattern(agents=agents, cap=cap, texts=texts)


def horizontal_script(pattern: HorizontalPattern) -> list[tuple[str, str]]:
    entries = [
        (pattern.agents[i % len(pattern.agents)], pattern.texts[i])
        for i in range(pattern.cap)
    ]
    summary = "\n".join(f"{name}: keep helping the group" for name in pattern.agents)
    entries.append(("summarizer", summary))
    return entries


@dataclass
class PipelineScenario:
    """A full multi-round run driven entirely by one wildcard script."""

    config: RunConfig
    goal: Goal
    entries: list[tuple[str, str]]
    expected_rounds: int
    expected_status: str


def random_pipeline_scenario(rng: random.Random) -> PipelineScenario:
    setup = rng.choice([Setup.SOLO, Setup.GROUP])
    structure = rng.choice([Structure.VERTICAL, Structure.HORIZONTAL])
    n = 1 if setup is Setup.SOLO else rng.randint(2, 3)
    max_rounds = rng.randint(1, 3)
    k_max = rng.randint(1, 2)
    solve_round = rng.choice([None] + list(range(max_rounds)))
    config = RunConfig(
        setup=setup,
        n_experts=n,
        structure=structure,
        max_rounds=max_rounds,
        k_max=k_max,
        evaluator_kind=EvaluatorKind.AGENT,
    )
    goal = Goal(text=f"desk goal {rng.randint(0, 10_000)}", task_kind=TaskKind.QA)
    names = [f"E{i}" for i in range(n)]
    entries: list[tuple[str, str]] = []
    rounds = max_rounds if solve_round is None else solve_round + 1
    for r in range(rounds):
        roster = "\n".join(f"{i + 1}. {names[i]}: desk expert {r}-{i}" for i in range(n))
        entries.append(("*", roster))
        if n == 1:
            entries.append(("*", f"answer r{r} {rng.randint(0, 999)}"))
        elif structure is Structure.VERTICAL:
            approve_at = rng.choice([None] + list(range(k_max)))
            iterations = k_max if approve_at is None else approve_at + 1
            entries.append(("*", f"answer r{r} draft-0"))
            for j in range(iterations):
                approved = approve_at is not None and j == approve_at
                for i in range(n - 1):
                    if approved:
                        entries.append(("*", "APPROVE"))
                    else:
                        entries.append(("*", f"REJECT\nneeds work {r}-{j}-{i}"))
                if not approved:
                    entries.append(("*", f"answer r{r} draft-{j + 1}"))
        else:
            consensus = rng.random() < 0.6
            turns = n if consensus else config.max_discussion_turns
            for t in range(turns):
                suffix = " [END]" if consensus else ""
                entries.append(("*", f"thought r{r} t{t}{suffix}"))
            entries.append(("*", f"summary of round {r}"))
        if solve_round is not None and r == solve_round:
            entries.append(("*", "SOLVED"))
        else:
            entries.append(("*", f"UNSOLVED\nfeedback-{r}-{rng.randint(0, 999)}"))
    expected_status = "unsolved" if solve_round is None else "solved"
    return PipelineScenario(
        config=config,
        goal=goal,
        entries=entries,
        expected_rounds=rounds,
        expected_status=expected_status,
    )


def provider_for(scenario: PipelineScenario) -> ScriptedProvider:
    return ScriptedProvider(list(scenario.entries))
