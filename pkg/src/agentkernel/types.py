"""Core domain types shared by every stage of the pipeline."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .errors import ConfigurationError, ValidationError


class TaskKind(str, Enum):
    QA = "qa"
    CONSTRAINED_GENERATION = "constrained_generation"
    MATH = "math"
    CODE = "code"
    TOOL = "tool"
    CRAFTING = "crafting"


class Setup(str, Enum):
    COT = "cot"
    SOLO = "solo"
    GROUP = "group"


class Structure(str, Enum):
    HORIZONTAL = "horizontal"
    VERTICAL = "vertical"


class EvaluatorKind(str, Enum):
    AGENT = "agent"
    HUMAN = "human"
    PROGRAMMATIC = "programmatic"


class RunStatus(str, Enum):
    SOLVED = "solved"
    UNSOLVED = "unsolved"
    ABORTED = "aborted"
    AWAITING_HUMAN = "awaiting_human"


class Stage(str, Enum):
    RECRUIT = "recruit"
    DECIDE = "decide"
    EXECUTE = "execute"
    EVALUATE = "evaluate"


STAGE_ORDER = {Stage.RECRUIT: 0, Stage.DECIDE: 1, Stage.EXECUTE: 2, Stage.EVALUATE: 3}

# Setups that bypass collaborative stages entirely only make sense where a
# single direct answer can stand in for the whole round.
COT_COMPATIBLE_KINDS = frozenset(
    {TaskKind.QA, TaskKind.CONSTRAINED_GENERATION, TaskKind.MATH, TaskKind.CODE}
)


@dataclass(frozen=True)
class Goal:
    """A task statement plus the kind of environment it runs against."""

    text: str
    task_kind: TaskKind = TaskKind.QA

    def __post_init__(self):
        if not self.text or not self.text.strip():
            raise ValidationError("goal text must be non-empty")


@dataclass
class RunConfig:
    """Knobs for one pipeline run.

    ``setup=solo`` forces a single expert and ``setup=cot`` forces a single
    round; both are normalized here so constructed configs always satisfy
    their invariants.
    """

    setup: Setup = Setup.GROUP
    n_experts: int = 4
    structure: Structure = Structure.VERTICAL
    max_rounds: int = 3
    k_max: int = 3
    max_discussion_turns: int | None = None  # None: two full cycles (2 * n_experts)
    provider_ref: str = "default"
    evaluator_kind: EvaluatorKind = EvaluatorKind.AGENT

    def __post_init__(self):
        self.setup = Setup(self.setup)
        self.structure = Structure(self.structure)
        self.evaluator_kind = EvaluatorKind(self.evaluator_kind)
        if self.setup is Setup.SOLO:
            self.n_experts = 1
        if self.setup is Setup.COT:
            self.max_rounds = 1
        for name in ("n_experts", "max_rounds", "k_max"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be a positive count")
        if self.max_discussion_turns is None:
            self.max_discussion_turns = 2 * self.n_experts
        if self.max_discussion_turns < 1:
            raise ConfigurationError("max_discussion_turns must be a positive count")

    def validate_for_goal(self, goal: Goal) -> None:
        if self.setup is Setup.COT and goal.task_kind not in COT_COMPATIBLE_KINDS:
            raise ConfigurationError(
                f"cot setup has no executor for {goal.task_kind.value} tasks"
            )


@dataclass
class Verdict:
    """Evaluation outcome: did the round solve the goal, and if not, why not."""

    solved: bool
    feedback: str = ""
    score: float | None = None

    def __post_init__(self):
        if not self.solved and not self.feedback.strip():
            raise ValidationError("a rejecting verdict requires non-empty feedback")
        if self.score is not None and not 0.0 <= self.score <= 1.0:
            raise ValidationError("score must lie in [0, 1]")


@dataclass(frozen=True)
class ExpertProfile:
    """One recruited group member: a role label plus its persona text."""

    name: str
    description: str
    index: int = 0

    def __post_init__(self):
        if not self.name.strip():
            raise ValidationError("expert name must be non-empty")
        if not self.description.strip():
            raise ValidationError("expert description must be non-empty")


def default_n_experts(kind: TaskKind) -> int:
    """Group size defaults per task family (two for math, three for tool and
    crafting work, four elsewhere)."""
    if kind is TaskKind.MATH:
        return 2
    if kind in (TaskKind.TOOL, TaskKind.CRAFTING):
        return 3
    return 4


def default_structure(kind: TaskKind) -> Structure:
    """Single-answer tasks refine one proposal; multi-agent environments
    split work through open discussion."""
    if kind in (TaskKind.TOOL, TaskKind.CRAFTING):
        return Structure.HORIZONTAL
    return Structure.VERTICAL
