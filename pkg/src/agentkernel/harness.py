"""Task and suite configuration, the benchmark driver, and result tables."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Callable

import yaml

from .errors import ConfigurationError
from .evaluation import CheckerKind, evaluate_programmatic
from .execution import (
    AnswerEnv,
    CodeEnv,
    CraftingEnv,
    Environment,
    ToolEnv,
    load_world,
)
from .kernel import EventSink, Kernel
from .providers import Provider, ScriptedProvider
from .records import RunRecord
from .types import (
    EvaluatorKind,
    ExpertProfile,
    Goal,
    RunConfig,
    RunStatus,
    Setup,
    TaskKind,
    default_n_experts,
    default_structure,
)

log = logging.getLogger(__name__)

SETUPS = (Setup.COT, Setup.SOLO, Setup.GROUP)

_CHECKER_FOR_KIND = {
    TaskKind.MATH: CheckerKind.EXACT_NUMERIC,
    TaskKind.QA: CheckerKind.EXACT_NUMERIC,
    TaskKind.CODE: CheckerKind.ALL_TESTS_PASS,
    TaskKind.CONSTRAINED_GENERATION: CheckerKind.FULL_COVERAGE,
    TaskKind.CRAFTING: CheckerKind.CRAFTING_GOAL,
}


def fixtures_root():
    return resources.files("agentkernel").joinpath("fixtures")


@dataclass
class TaskSpec:
    id: str
    goal: str
    kind: TaskKind
    gold: dict[str, Any]
    world: str | dict | None = None
    script: str | list | None = None
    manual_group: list[dict] | None = None
    config: dict[str, Any] = field(default_factory=dict)
    overrides: dict[str, dict[str, Any]] = field(default_factory=dict)

    def __post_init__(self):
        self.kind = TaskKind(self.kind)
        self.validate()

    def validate(self) -> None:
        if not self.id:
            raise ConfigurationError("task id is required")
        if not self.goal or not self.goal.strip():
            raise ConfigurationError(f"task {self.id}: goal is required")
        if not isinstance(self.gold, dict) or not self.gold:
            raise ConfigurationError(f"task {self.id}: gold data is required")
        needed = {
            TaskKind.MATH: "answer",
            TaskKind.QA: "answer",
            TaskKind.CODE: "tests",
            TaskKind.CONSTRAINED_GENERATION: "concepts",
            TaskKind.CRAFTING: "crafting",
            TaskKind.TOOL: "answer",
        }[self.kind]
        if needed not in self.gold:
            raise ConfigurationError(
                f"task {self.id}: {self.kind.value} tasks need gold {needed!r}"
            )
        if self.kind is TaskKind.CRAFTING:
            target = self.gold["crafting"]
            if not isinstance(target, dict) or "item" not in target:
                raise ConfigurationError(
                    f"task {self.id}: crafting gold must be {{item, count}}"
                )
            if self.world is None:
                raise ConfigurationError(f"task {self.id}: crafting tasks need a world")

    @property
    def checker(self) -> CheckerKind | None:
        return _CHECKER_FOR_KIND.get(self.kind)

    def checker_gold(self) -> Any:
        if self.kind is TaskKind.CRAFTING:
            return self.gold["crafting"]
        if self.kind is TaskKind.CODE:
            return None
        if self.kind is TaskKind.CONSTRAINED_GENERATION:
            return None
        return self.gold.get("answer")

    def to_goal(self) -> Goal:
        return Goal(text=self.goal, task_kind=self.kind)

    def build_env(self, root=None) -> Environment:
        root = root or fixtures_root()
        checker = self.checker.value if self.checker else None
        gold = self.checker_gold()
        if self.kind in (TaskKind.MATH, TaskKind.QA):
            return AnswerEnv(checker=checker, gold=gold)
        if self.kind is TaskKind.CONSTRAINED_GENERATION:
            return AnswerEnv(concepts=list(self.gold["concepts"]), checker=checker, gold=gold)
        if self.kind is TaskKind.CODE:
            return CodeEnv(tests=self.gold["tests"], checker=checker, gold=gold)
        if self.kind is TaskKind.TOOL:
            corpus = root.joinpath("corpus") if hasattr(root, "joinpath") else Path(root) / "corpus"
            return ToolEnv(corpus=_corpus_to_dict(corpus))
        world_source = self.world
        if isinstance(world_source, str):
            world_source = _load_yaml_resource(root, world_source)
        return CraftingEnv(load_world(world_source), checker=checker, gold=gold)

    def manual_profiles(self) -> list[ExpertProfile] | None:
        if not self.manual_group:
            return None
        return [
            ExpertProfile(name=p["name"], description=p["description"], index=i)
            for i, p in enumerate(self.manual_group)
        ]

    def build_config(self, setup: Setup) -> RunConfig:
        base: dict[str, Any] = {
            "setup": setup.value,
            "n_experts": 1 if setup is Setup.SOLO else default_n_experts(self.kind),
            "structure": default_structure(self.kind).value,
            "max_rounds": 3,
            "evaluator_kind": (
                EvaluatorKind.PROGRAMMATIC.value if self.checker else EvaluatorKind.AGENT.value
            ),
        }
        if self.manual_group:
            base["n_experts"] = len(self.manual_group)
        base.update(self.config)
        base.update(self.overrides.get(setup.value, {}))
        base["setup"] = setup.value
        try:
            return RunConfig(**base)
        except TypeError as exc:
            raise ConfigurationError(f"task {self.id}: bad config override ({exc})") from exc

    def script_entries(self, root=None) -> list[dict] | None:
        if self.script is None:
            return None
        if isinstance(self.script, list):
            return self.script
        data = _load_yaml_resource(root or fixtures_root(), self.script)
        return data["entries"]


def _corpus_to_dict(corpus_dir) -> dict[str, str]:
    docs: dict[str, str] = {}
    try:
        entries = list(corpus_dir.iterdir())
    except (FileNotFoundError, OSError):
        return docs
    for entry in entries:
        if entry.name.endswith(".txt"):
            docs[entry.name[:-4]] = entry.read_text(encoding="utf-8")
    return docs


def _load_yaml_resource(root, relative: str) -> Any:
    if hasattr(root, "joinpath"):
        ref = root.joinpath(relative)
        with ref.open(encoding="utf-8") as fh:
            return yaml.safe_load(fh)
    with open(Path(root) / relative, encoding="utf-8") as fh:
        return yaml.safe_load(fh)


@dataclass
class Suite:
    suite_id: str
    tasks: list[TaskSpec]

    def __post_init__(self):
        ids = [t.id for t in self.tasks]
        if len(set(ids)) != len(ids):
            raise ConfigurationError(f"suite {self.suite_id}: duplicate task ids")

    def task(self, task_id: str) -> TaskSpec:
        for t in self.tasks:
            if t.id == task_id:
                return t
        raise ConfigurationError(f"suite {self.suite_id}: no task {task_id!r}")


BUILTIN_SUITES = ("math10", "concepts10", "code10", "crafting3")


def load_suite_data(data: dict) -> Suite:
    tasks = [
        TaskSpec(
            id=t["id"],
            goal=t["goal"],
            kind=t["kind"],
            gold=t["gold"],
            world=t.get("world"),
            script=t.get("script"),
            manual_group=t.get("manual_group"),
            config=t.get("config", {}),
            overrides=t.get("overrides", {}),
        )
        for t in data["tasks"]
    ]
    return Suite(suite_id=data["suite"], tasks=tasks)


def load_builtin_suite(name: str) -> Suite:
    if name not in BUILTIN_SUITES:
        raise ConfigurationError(
            f"unknown suite {name!r}; bundled suites: {', '.join(BUILTIN_SUITES)}"
        )
    data = _load_yaml_resource(fixtures_root(), f"suites/{name}.yaml")
    return load_suite_data(data)


def load_suite_file(path: str | Path) -> Suite:
    with open(path, encoding="utf-8") as fh:
        return load_suite_data(yaml.safe_load(fh))


# -- benchmark driver ---------------------------------------------------------------

ProviderFactory = Callable[[str], Provider]


@dataclass
class TaskOutcome:
    task_id: str
    metric: float
    solved: bool
    status: str
    run_id: str = ""
    error: str | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "task_id": self.task_id,
            "metric": self.metric,
            "solved": self.solved,
            "status": self.status,
            "run_id": self.run_id,
            "error": self.error,
        }


@dataclass
class SuiteResult:
    suite_id: str
    setup: str
    outcomes: list[TaskOutcome]

    @property
    def aggregate(self) -> float:
        return recompute_aggregate(self.outcomes)

    def to_dict(self) -> dict[str, Any]:
        return {
            "suite": self.suite_id,
            "setup": self.setup,
            "aggregate": self.aggregate,
            "outcomes": [o.to_dict() for o in self.outcomes],
        }


def recompute_aggregate(outcomes: list[TaskOutcome]) -> float:
    if not outcomes:
        return 0.0
    return sum(o.metric for o in outcomes) / len(outcomes)


def score_task(task: TaskSpec, env: Environment, record: RunRecord) -> tuple[float, bool]:
    """Per-task metric from the final environment state against gold data,
    independent of whatever evaluator steered the run."""
    if task.checker is None:
        solved = record.status is RunStatus.SOLVED
        return (1.0 if solved else 0.0), solved
    verdict = evaluate_programmatic(
        env.evaluation_view(), task.to_goal(), task.checker, task.checker_gold()
    )
    if task.kind is TaskKind.CONSTRAINED_GENERATION:
        return (verdict.score or 0.0), verdict.solved
    return (1.0 if verdict.solved else 0.0), verdict.solved


def run_task(
    task: TaskSpec,
    setup: Setup,
    provider: Provider,
    event_sink: EventSink | None = None,
    root=None,
) -> tuple[TaskOutcome, RunRecord | None]:
    config = task.build_config(setup)
    goal = task.to_goal()
    env = task.build_env(root)
    kernel = Kernel(event_sink=event_sink)
    try:
        record = kernel.start(
            config, goal, env, provider, manual_profiles=task.manual_profiles()
        )
    except ConfigurationError:
        raise
    except Exception as exc:  # any task failure marks the task, not the suite
        log.warning("task %s failed: %s", task.id, exc)
        return (
            TaskOutcome(
                task_id=task.id,
                metric=0.0,
                solved=False,
                status="error",
                error=str(exc),
            ),
            None,
        )
    if record.status is RunStatus.ABORTED:
        cause = next(
            (e.payload.get("cause") for e in record.events if e.kind == "aborted"), ""
        )
        return (
            TaskOutcome(
                task_id=task.id,
                metric=0.0,
                solved=False,
                status=record.status.value,
                run_id=record.run_id,
                error=cause,
            ),
            record,
        )
    metric, solved = score_task(task, env, record)
    return (
        TaskOutcome(
            task_id=task.id,
            metric=metric,
            solved=solved,
            status=record.status.value,
            run_id=record.run_id,
        ),
        record,
    )


def run_benchmark(
    suite: Suite,
    setup: Setup | str,
    provider_factory: ProviderFactory,
    event_sink: EventSink | None = None,
    parallelism: int = 1,
    root=None,
) -> SuiteResult:
    """Run every suite task under one setup; aborted tasks do not stop the
    suite. Results merge deterministically in suite task order."""
    setup = Setup(setup)
    for task in suite.tasks:
        task.build_config(setup).validate_for_goal(task.to_goal())

    def one(task: TaskSpec) -> TaskOutcome:
        outcome, _ = run_task(task, setup, provider_factory(task.id), event_sink, root)
        return outcome

    if parallelism <= 1:
        outcomes = [one(task) for task in suite.tasks]
    else:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            outcomes = list(pool.map(one, suite.tasks))
    return SuiteResult(suite_id=suite.suite_id, setup=setup.value, outcomes=outcomes)


def scripted_factory(
    entries_by_task: dict[str, list], default: list | None = None
) -> ProviderFactory:
    """A fresh ScriptedProvider per task, so suite order cannot matter."""

    def factory(task_id: str) -> ScriptedProvider:
        entries = entries_by_task.get(task_id, default)
        if entries is None:
            raise ConfigurationError(f"no scripted entries for task {task_id!r}")
        return ScriptedProvider.from_dicts(
            [e if isinstance(e, dict) else {"agent": e[0], "response": e[1]} for e in entries]
        )

    return factory


# -- comparisons ----------------------------------------------------------------------


def compare_setups(results: list[SuiteResult]) -> dict[str, Any]:
    """Tasks as rows, setups as columns, metric in each cell."""
    if not results:
        raise ConfigurationError("no results to compare")
    suite_ids = {r.suite_id for r in results}
    if len(suite_ids) > 1:
        raise ConfigurationError(f"results span different suites: {sorted(suite_ids)}")
    task_ids = [o.task_id for o in results[0].outcomes]
    for r in results[1:]:
        if [o.task_id for o in r.outcomes] != task_ids:
            raise ConfigurationError("results do not cover the same tasks")
    setups = [r.setup for r in results]
    rows = []
    for i, task_id in enumerate(task_ids):
        row: dict[str, Any] = {"task_id": task_id}
        for r in results:
            row[r.setup] = r.outcomes[i].metric
        rows.append(row)
    return {
        "suite": results[0].suite_id,
        "setups": setups,
        "rows": rows,
        "aggregates": {r.setup: r.aggregate for r in results},
    }


def render_comparison(table: dict[str, Any]) -> str:
    setups = table["setups"]
    header = ["task"] + list(setups)
    lines = [header] + [
        [row["task_id"]] + [f"{row[s]:.3f}" for s in setups] for row in table["rows"]
    ]
    lines.append(["aggregate"] + [f"{table['aggregates'][s]:.3f}" for s in setups])
    widths = [max(len(line[i]) for line in lines) for i in range(len(header))]
    rendered = []
    for i, line in enumerate(lines):
        rendered.append("  ".join(cell.ljust(widths[j]) for j, cell in enumerate(line)))
        if i == 0:
            rendered.append("  ".join("-" * w for w in widths))
    return "\n".join(rendered)
