"""Command-line interface: run, bench, replay, serve, validate."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import yaml

from .errors import AgentKernelError, ConfigurationError
from .evaluation import terminal_feedback_source
from .harness import (
    BUILTIN_SUITES,
    ProviderFactory,
    Suite,
    TaskSpec,
    compare_setups,
    load_builtin_suite,
    load_suite_file,
    render_comparison,
    run_benchmark,
    run_task,
    scripted_factory,
)
from .kernel import Kernel
from .persistence import JsonlEventStore, replay
from .providers import HttpProvider, RetryingProvider, RetryPolicy, ScriptedProvider
from .types import Setup

TASK_SCRIPT_PROVIDER = "task-script"


class AppConfig:
    """Everything the CLI and gateway need: providers, tasks, suites."""

    def __init__(self, data: dict | None = None, base_dir: Path | None = None):
        data = data or {}
        self.base_dir = base_dir or Path.cwd()
        self.out_dir = Path(data.get("out_dir", "runs"))
        self.suites: dict[str, Suite] = {}
        for name in BUILTIN_SUITES:
            self.suites[name] = load_builtin_suite(name)
        for entry in data.get("suites", []):
            suite = load_suite_file(self.base_dir / entry)
            self.suites[suite.suite_id] = suite
        self.tasks: dict[str, TaskSpec] = {}
        for suite in self.suites.values():
            for task in suite.tasks:
                self.tasks.setdefault(task.id, task)
        for raw in data.get("tasks", []):
            task = TaskSpec(
                id=raw["id"],
                goal=raw["goal"],
                kind=raw["kind"],
                gold=raw["gold"],
                world=raw.get("world"),
                script=raw.get("script"),
                manual_group=raw.get("manual_group"),
                config=raw.get("config", {}),
                overrides=raw.get("overrides", {}),
            )
            self.tasks[task.id] = task
        self.provider_factories: dict[str, ProviderFactory] = {
            TASK_SCRIPT_PROVIDER: self._task_script_factory
        }
        for name, spec in (data.get("providers") or {}).items():
            self.provider_factories[name] = self._build_factory(name, spec)
        self.default_provider = data.get("default_provider", TASK_SCRIPT_PROVIDER)

    def _task_script_factory(self, task_id: str):
        task = self.tasks.get(task_id)
        if task is None or task.script is None:
            raise ConfigurationError(
                f"task {task_id!r} has no bundled script; configure a provider"
            )
        return ScriptedProvider.from_dicts(task.script_entries())

    def _build_factory(self, name: str, spec: dict) -> ProviderFactory:
        kind = spec.get("type")
        if kind == "scripted":
            path = self.base_dir / spec["script"]
            with open(path, encoding="utf-8") as fh:
                data = yaml.safe_load(fh)
            if "tasks" in data:
                return scripted_factory(data["tasks"], data.get("entries"))
            return scripted_factory({}, data["entries"])
        if kind == "openai":
            provider = RetryingProvider(
                HttpProvider(
                    base_url=spec["base_url"],
                    model=spec["model"],
                    temperature=float(spec.get("temperature", 0.0)),
                    timeout=float(spec.get("timeout", 60.0)),
                ),
                RetryPolicy(
                    max_retries=int(spec.get("max_retries", 2)),
                    base_delay=float(spec.get("base_delay", 0.5)),
                ),
            )
            return lambda task_id: provider
        raise ConfigurationError(f"provider {name!r}: unknown type {kind!r}")

    def resolve_suite(self, name: str) -> Suite:
        if name in self.suites:
            return self.suites[name]
        raise ConfigurationError(
            f"unknown suite {name!r}; known: {', '.join(sorted(self.suites))}"
        )


def load_app_config(path: str | None) -> AppConfig:
    if path is None:
        return AppConfig()
    p = Path(path)
    with open(p, encoding="utf-8") as fh:
        data = yaml.safe_load(fh) or {}
    return AppConfig(data, base_dir=p.parent)


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="Config file defining providers, tasks, and suites.")
@click.option("--provider", "provider_name", default=None,
              help="Provider name to use (from the config).")
@click.option("--out", "out_dir", type=click.Path(), default=None,
              help="Directory for transcripts and results.")
@click.pass_context
def main(ctx, config_path, provider_name, out_dir):
    """Multi-agent orchestration: run tasks, benchmark setups, replay transcripts."""
    ctx.ensure_object(dict)
    try:
        app_config = load_app_config(config_path)
    except (AgentKernelError, OSError, yaml.YAMLError) as exc:
        raise click.ClickException(str(exc))
    if out_dir:
        app_config.out_dir = Path(out_dir)
    ctx.obj["config"] = app_config
    ctx.obj["provider"] = provider_name


@main.command()
@click.option("--task", "task_id", required=True, help="Task id from a known suite.")
@click.option("--setup", type=click.Choice(["cot", "solo", "group"]), default="group")
@click.option("--human", is_flag=True, help="Evaluate rounds interactively at the terminal.")
@click.pass_context
def run(ctx, task_id, setup, human):
    """Run a single task and print the outcome."""
    cfg: AppConfig = ctx.obj["config"]
    task = cfg.tasks.get(task_id)
    if task is None:
        raise click.ClickException(f"unknown task {task_id!r}")
    provider_name = ctx.obj["provider"] or cfg.default_provider
    factory = cfg.provider_factories.get(provider_name)
    if factory is None:
        raise click.ClickException(f"unknown provider {provider_name!r}")
    store = JsonlEventStore(cfg.out_dir)
    if human:
        task = TaskSpec(
            id=task.id, goal=task.goal, kind=task.kind.value, gold=task.gold,
            world=task.world, script=task.script, manual_group=task.manual_group,
            config={**task.config, "evaluator_kind": "human"}, overrides=task.overrides,
        )
        kernel = Kernel(event_sink=store.append, feedback_source=terminal_feedback_source())
        try:
            record = kernel.start(
                task.build_config(Setup(setup)), task.to_goal(), task.build_env(),
                factory(task.id), manual_profiles=task.manual_profiles(),
            )
        except AgentKernelError as exc:
            raise click.ClickException(str(exc))
        click.echo(json.dumps(record.to_summary(), indent=2))
        click.echo(f"transcript: {store.path_for(record.run_id)}")
        return
    try:
        outcome, record = run_task(task, Setup(setup), factory(task.id), event_sink=store.append)
    except AgentKernelError as exc:
        raise click.ClickException(str(exc))
    click.echo(json.dumps(outcome.to_dict(), indent=2))
    if record is not None:
        click.echo(f"transcript: {store.path_for(record.run_id)}")


@main.command()
@click.option("--suite", "suite_name", required=True)
@click.option("--setup", "setups", type=click.Choice(["cot", "solo", "group"]),
              multiple=True, default=("group",))
@click.option("--parallel", type=int, default=1)
@click.pass_context
def bench(ctx, suite_name, setups, parallel):
    """Run a suite under one or more setups and print the comparison."""
    cfg: AppConfig = ctx.obj["config"]
    try:
        suite = cfg.resolve_suite(suite_name)
    except ConfigurationError as exc:
        raise click.ClickException(str(exc))
    provider_name = ctx.obj["provider"] or cfg.default_provider
    factory = cfg.provider_factories.get(provider_name)
    if factory is None:
        raise click.ClickException(f"unknown provider {provider_name!r}")
    store = JsonlEventStore(cfg.out_dir)
    results = []
    for setup in setups:
        try:
            result = run_benchmark(
                suite, setup, factory, event_sink=store.append, parallelism=parallel
            )
        except AgentKernelError as exc:
            raise click.ClickException(str(exc))
        results.append(result)
        click.echo(f"{suite.suite_id} [{setup}]: aggregate {result.aggregate:.3f}")
    out_path = cfg.out_dir / f"bench_{suite.suite_id}.json"
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(
        json.dumps([r.to_dict() for r in results], indent=2), encoding="utf-8"
    )
    if len(results) > 1:
        click.echo(render_comparison(compare_setups(results)))
    click.echo(f"results: {out_path}")


@main.command(name="replay")
@click.argument("run_id")
@click.pass_context
def replay_cmd(ctx, run_id):
    """Rebuild a run from its persisted transcript and print the summary."""
    cfg: AppConfig = ctx.obj["config"]
    store = JsonlEventStore(cfg.out_dir)
    try:
        record = replay(store, run_id)
    except AgentKernelError as exc:
        raise click.ClickException(str(exc))
    click.echo(json.dumps(record.to_summary(), indent=2))
    click.echo(f"events: {len(record.events)} (sequence verified)")


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True,
              help="Bind address; loopback by default.")
@click.option("--port", default=8712, show_default=True, type=int)
@click.option("--ui", "ui_dir", type=click.Path(exists=True), default=None,
              help="Directory of built console assets to serve at /.")
@click.pass_context
def serve(ctx, host, port, ui_dir):
    """Start the HTTP gateway (and console, when built assets are given)."""
    import uvicorn

    from .gateway import create_app

    cfg: AppConfig = ctx.obj["config"]
    if ui_dir is None:
        candidate = Path(__file__).resolve().parents[2] / "frontend" / "dist"
        if candidate.is_dir():
            ui_dir = str(candidate)
    app = create_app(
        list(cfg.tasks.values()),
        cfg.provider_factories,
        default_provider=ctx.obj["provider"] or cfg.default_provider,
        transcripts_dir=str(cfg.out_dir),
        ui_dir=ui_dir,
    )
    uvicorn.run(app, host=host, port=port, log_level="info")


@main.command()
@click.pass_context
def validate(ctx):
    """Check the configuration: providers, suites, task gold data."""
    cfg: AppConfig = ctx.obj["config"]
    problems = []
    for suite in cfg.suites.values():
        for task in suite.tasks:
            try:
                task.validate()
                task.build_env()
                for setup in ("cot", "solo", "group"):
                    config = task.build_config(Setup(setup))
                    try:
                        config.validate_for_goal(task.to_goal())
                    except ConfigurationError:
                        pass  # some setups legitimately reject some kinds
            except AgentKernelError as exc:
                problems.append(f"{suite.suite_id}/{task.id}: {exc}")
    if problems:
        for p in problems:
            click.echo(f"INVALID {p}", err=True)
        sys.exit(1)
    click.echo(
        f"ok: {len(cfg.suites)} suites, {len(cfg.tasks)} tasks, "
        f"{len(cfg.provider_factories)} providers"
    )


if __name__ == "__main__":
    main()
