"""Local HTTP service for run control, event streaming, and human feedback.

Event streaming is newline-delimited JSON over a long-lived response with a
``?from=`` resume cursor, so clients reconnect without gaps or duplicates.
"""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass, field
from typing import Any

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, Response, StreamingResponse

from .errors import AgentKernelError, ConfigurationError
from .harness import ProviderFactory, TaskSpec
from .kernel import Kernel
from .persistence import InMemoryEventStore, JsonlEventStore, tee_sinks
from .records import RunRecord
from .types import RunStatus, Setup, Verdict

log = logging.getLogger(__name__)

TERMINAL_STATUSES = {RunStatus.SOLVED, RunStatus.UNSOLVED, RunStatus.ABORTED}


def _error(status_code: int, code: str, message: str, details: Any = None) -> JSONResponse:
    return JSONResponse(
        status_code=status_code,
        content={"code": code, "message": message, "details": details},
    )


@dataclass
class _RunHandle:
    run_id: str
    task_id: str
    kernel: Kernel
    record: RunRecord
    lock: threading.Lock = field(default_factory=threading.Lock)
    claimed_pause_gen: int = -1
    pause_gen: int = 0


class GatewayState:
    def __init__(
        self,
        tasks: list[TaskSpec],
        provider_factories: dict[str, ProviderFactory],
        default_provider: str = "default",
        transcripts_dir: str | None = None,
    ):
        self.tasks: dict[str, TaskSpec] = {t.id: t for t in tasks}
        self.provider_factories = provider_factories
        self.default_provider = default_provider
        self.store = InMemoryEventStore()
        self.jsonl = JsonlEventStore(transcripts_dir) if transcripts_dir else None
        if self.jsonl:
            self.sink = tee_sinks(self.store.append, self.jsonl.append)
        else:
            self.sink = self.store.append
        self.runs: dict[str, _RunHandle] = {}
        self._lock = threading.Lock()

    def resolve_provider(self, name: str | None, task_id: str):
        ref = name or self.default_provider
        factory = self.provider_factories.get(ref)
        if factory is None:
            raise ConfigurationError(f"unknown provider {ref!r}")
        return factory(task_id)

    def start_run(self, task: TaskSpec, setup: Setup, provider_name: str | None) -> str:
        provider = self.resolve_provider(provider_name, task.id)
        kernel = Kernel(event_sink=self._run_sink)
        record = kernel.prepare(
            task.build_config(setup),
            task.to_goal(),
            task.build_env(),
            provider,
            manual_profiles=task.manual_profiles(),
        )
        handle = _RunHandle(
            run_id=record.run_id, task_id=task.id, kernel=kernel, record=record
        )
        with self._lock:
            self.runs[record.run_id] = handle
        thread = threading.Thread(
            target=self._drive, args=(handle, lambda: kernel.launch(record)), daemon=True
        )
        thread.start()
        return record.run_id

    def _run_sink(self, run_id: str, event) -> None:
        self.sink(run_id, event)
        if event.kind == "awaiting_human":
            handle = self.runs.get(run_id)
            if handle:
                handle.pause_gen += 1

    def _drive(self, handle: _RunHandle, fn) -> None:
        try:
            fn()
        except AgentKernelError as exc:
            log.warning("run %s failed: %s", handle.run_id, exc)
        except Exception:
            log.exception("run %s crashed", handle.run_id)
        if handle.record.status in TERMINAL_STATUSES:
            self.store.close(handle.run_id)

    def summary(self, handle: _RunHandle) -> dict[str, Any]:
        record = handle.record
        events = self.store.read(handle.run_id)
        return {
            "run_id": handle.run_id,
            "task_id": handle.task_id,
            "goal": record.goal.text,
            "status": record.status.value,
            "round": record.rounds[-1].index if record.rounds else 0,
            "rounds": len(record.rounds),
            "terminal": self.store.is_closed(handle.run_id),
            "updated_at": events[-1].ts if events else None,
        }


def create_app(
    tasks: list[TaskSpec],
    provider_factories: dict[str, ProviderFactory],
    default_provider: str = "default",
    transcripts_dir: str | None = None,
    ui_dir: str | None = None,
) -> FastAPI:
    state = GatewayState(
        tasks, provider_factories, default_provider, transcripts_dir
    )
    app = FastAPI(title="agentkernel gateway")
    app.state.gateway = state

    @app.exception_handler(AgentKernelError)
    async def engine_error(request: Request, exc: AgentKernelError):
        return _error(400, "bad_request", str(exc))

    @app.get("/v1/tasks")
    def list_tasks():
        return [
            {"id": t.id, "goal": t.goal, "kind": t.kind.value}
            for t in state.tasks.values()
        ]

    @app.post("/v1/runs", status_code=202)
    def start_run(body: dict):
        setup_name = body.get("setup", "group")
        try:
            setup = Setup(setup_name)
        except ValueError:
            return _error(400, "bad_setup", f"unknown setup {setup_name!r}")
        if "task_id" in body:
            task = state.tasks.get(body["task_id"])
            if task is None:
                return _error(404, "unknown_task", f"no task {body['task_id']!r}")
        elif "task" in body:
            try:
                task = TaskSpec(
                    id=body["task"].get("id", "inline"),
                    goal=body["task"].get("goal", ""),
                    kind=body["task"].get("kind", "qa"),
                    gold=body["task"].get("gold", {}),
                    world=body["task"].get("world"),
                    script=body["task"].get("script"),
                    manual_group=body["task"].get("manual_group"),
                    config=body["task"].get("config", {}),
                    overrides=body["task"].get("overrides", {}),
                )
            except (ConfigurationError, ValueError, KeyError, TypeError) as exc:
                return _error(400, "invalid_task", str(exc))
        else:
            return _error(400, "missing_task", "provide task_id or an inline task")
        try:
            run_id = state.start_run(task, setup, body.get("provider"))
        except ConfigurationError as exc:
            return _error(400, "invalid_run", str(exc))
        return {"run_id": run_id}

    @app.get("/v1/runs")
    def list_runs():
        return [state.summary(h) for h in state.runs.values()]

    @app.get("/v1/runs/{run_id}")
    def get_run(run_id: str):
        handle = state.runs.get(run_id)
        if handle is None:
            return _error(404, "unknown_run", f"no run {run_id!r}")
        return state.summary(handle)

    @app.get("/v1/runs/{run_id}/events")
    def stream_events(run_id: str, request: Request):
        handle = state.runs.get(run_id)
        if handle is None:
            return _error(404, "unknown_run", f"no run {run_id!r}")
        try:
            from_seq = int(request.query_params.get("from", "0"))
        except ValueError:
            return _error(400, "bad_cursor", "from must be an integer")

        def generate():
            next_seq = from_seq
            while True:
                events = state.store.read_from(run_id, next_seq)
                for event in events:
                    yield event.to_line() + "\n"
                    next_seq = event.seq + 1
                if state.store.is_closed(run_id):
                    for event in state.store.read_from(run_id, next_seq):
                        yield event.to_line() + "\n"
                        next_seq = event.seq + 1
                    return
                if not events:
                    state.store.wait_for_more(run_id, next_seq, timeout=0.2)
                    # blank keep-alive so idle streams stay closable; clients
                    # skip empty lines
                    yield "\n"

        return StreamingResponse(generate(), media_type="application/x-ndjson")

    @app.post("/v1/runs/{run_id}/feedback", status_code=204)
    def submit_feedback(run_id: str, body: dict):
        handle = state.runs.get(run_id)
        if handle is None:
            return _error(404, "unknown_run", f"no run {run_id!r}")
        solved = body.get("solved")
        feedback = body.get("feedback", "") or ""
        if not isinstance(solved, bool):
            return _error(422, "invalid_verdict", "solved must be a boolean")
        if not solved and not feedback.strip():
            return _error(422, "empty_feedback", "a rejection requires feedback text")
        with handle.lock:
            if handle.record.status is not RunStatus.AWAITING_HUMAN:
                return _error(
                    409,
                    "not_awaiting",
                    f"run is {handle.record.status.value}, not awaiting_human",
                )
            if handle.claimed_pause_gen >= handle.pause_gen:
                return _error(409, "already_resumed", "a verdict was already accepted")
            handle.claimed_pause_gen = handle.pause_gen
        verdict = Verdict(solved=solved, feedback=feedback)
        thread = threading.Thread(
            target=state._drive,
            args=(handle, lambda: handle.kernel.resume(handle.record, verdict)),
            daemon=True,
        )
        thread.start()
        return Response(status_code=204)

    if ui_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="console")

    return app
