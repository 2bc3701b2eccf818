"""Isolated execution of generated code and its unit tests.

Code never runs in the host process: a throwaway subprocess (``python -I``,
resource-limited, confined to a temp directory) executes the payload and
reports a single JSON document on stdout.
"""

from __future__ import annotations

import json
import subprocess
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import SandboxError


@dataclass
class TestReport:
    total: int
    passed: int
    failures: list[tuple[str, str]] = field(default_factory=list)

    def __post_init__(self):
        if self.passed > self.total:
            raise ValueError("passed cannot exceed total")

    @property
    def all_passed(self) -> bool:
        return self.total > 0 and self.passed == self.total

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "passed": self.passed,
            "failures": [list(f) for f in self.failures],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TestReport":
        return cls(
            total=d["total"],
            passed=d["passed"],
            failures=[(f[0], f[1]) for f in d.get("failures", [])],
        )


@dataclass
class SandboxLimits:
    wall_seconds: float = 10.0
    cpu_seconds: int | None = None  # defaults to ceil(wall) + 1
    memory_bytes: int = 512 * 1024 * 1024


# Runs inside the sandbox. Reads code.py and tests.py from its cwd, executes
# them in one namespace, runs every test_* function, and prints the report.
_RUNNER_SOURCE = r"""
import io, json, sys, traceback

def main():
    code = open("code.py", encoding="utf-8").read()
    tests = open("tests.py", encoding="utf-8").read()
    ns = {"__name__": "sandboxed"}
    failures = []
    captured = io.StringIO()
    real_stdout = sys.stdout
    sys.stdout = captured
    try:
        try:
            exec(compile(code, "code.py", "exec"), ns)
        except BaseException as exc:
            report(real_stdout, 1, 0, [("collect", short(exc))])
            return
        try:
            exec(compile(tests, "tests.py", "exec"), ns)
        except BaseException as exc:
            report(real_stdout, 1, 0, [("<module>", short(exc))])
            return
        fns = sorted(
            name for name, value in ns.items()
            if name.startswith("test_") and callable(value)
        )
        passed = 0
        for name in fns:
            try:
                ns[name]()
                passed += 1
            except BaseException as exc:
                failures.append((name, short(exc)))
        report(real_stdout, len(fns), passed, failures)
    finally:
        sys.stdout = real_stdout

def short(exc):
    msg = "".join(traceback.format_exception_only(type(exc), exc)).strip()
    return msg[:500]

def report(out, total, passed, failures):
    out.write(json.dumps({
        "total": total,
        "passed": passed,
        "failures": [list(f) for f in failures],
    }))
    out.write("\n")

main()
"""


def _limit_resources(limits: SandboxLimits):
    import resource

    cpu = limits.cpu_seconds
    if cpu is None:
        cpu = int(limits.wall_seconds) + 1
    resource.setrlimit(resource.RLIMIT_CPU, (cpu, cpu + 1))
    if limits.memory_bytes:
        resource.setrlimit(resource.RLIMIT_AS, (limits.memory_bytes, limits.memory_bytes))


def run_unit_tests(
    code: str, tests: str, limits: SandboxLimits | None = None
) -> TestReport:
    """Execute code plus tests in an isolated subprocess.

    A wall-clock overrun yields a report with a single "timeout" failure;
    failure to spawn the sandbox raises SandboxError (infrastructure, not a
    test failure).
    """
    limits = limits or SandboxLimits()
    with tempfile.TemporaryDirectory(prefix="agentkernel-sbx-") as workdir:
        work = Path(workdir)
        (work / "code.py").write_text(code, encoding="utf-8")
        (work / "tests.py").write_text(tests, encoding="utf-8")
        (work / "runner.py").write_text(_RUNNER_SOURCE, encoding="utf-8")
        try:
            proc = subprocess.run(
                [sys.executable, "-I", "runner.py"],
                cwd=workdir,
                capture_output=True,
                text=True,
                timeout=limits.wall_seconds,
                preexec_fn=lambda: _limit_resources(limits),
            )
        except subprocess.TimeoutExpired:
            return TestReport(
                total=1,
                passed=0,
                failures=[("timeout", f"exceeded {limits.wall_seconds}s wall clock")],
            )
        except OSError as exc:
            raise SandboxError(f"could not spawn sandbox: {exc}") from exc
    try:
        data = json.loads(proc.stdout.strip().splitlines()[-1])
        return TestReport.from_dict(data)
    except (ValueError, IndexError, KeyError):
        detail = (proc.stderr or proc.stdout or "no output").strip()[-500:]
        return TestReport(total=1, passed=0, failures=[("crash", detail)])


def run_snippet(code: str, limits: SandboxLimits | None = None) -> str:
    """Run a standalone snippet in the same sandbox; returns combined output."""
    limits = limits or SandboxLimits(wall_seconds=5.0)
    with tempfile.TemporaryDirectory(prefix="agentkernel-snip-") as workdir:
        (Path(workdir) / "snippet.py").write_text(code, encoding="utf-8")
        try:
            proc = subprocess.run(
                [sys.executable, "-I", "snippet.py"],
                cwd=workdir,
                capture_output=True,
                text=True,
                timeout=limits.wall_seconds,
                preexec_fn=lambda: _limit_resources(limits),
            )
        except subprocess.TimeoutExpired:
            return f"error: exceeded {limits.wall_seconds}s wall clock"
        except OSError as exc:
            raise SandboxError(f"could not spawn sandbox: {exc}") from exc
    output = proc.stdout
    if proc.returncode != 0:
        output += f"\nerror (exit {proc.returncode}): {proc.stderr.strip()[-500:]}"
    return output.strip() or "(no output)"
