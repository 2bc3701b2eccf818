"""ReAct-style tool execution: thought, tool call, observation, repeated up
to a hard step cap, after which a pending conclusion is forced."""

from __future__ import annotations

import ast
import json
import operator
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable

from ..errors import ValidationError
from ..prompts import render_prompt
from ..providers import ChatMessage, CompletionRequest, Provider
from .sandbox import SandboxLimits, run_snippet

MAX_STEPS_DEFAULT = 10

StepCallback = Callable[[int, str, dict], None]  # (step, kind, payload)


class ConclusionStatus(str, Enum):
    PENDING = "pending"
    FINISHED = "finished"


@dataclass
class Conclusion:
    status: ConclusionStatus
    summary: str
    steps_used: int


@dataclass
class ToolCall:
    tool: str
    arguments: dict
    step: int


@dataclass
class Tool:
    name: str
    description: str
    fn: Callable[[dict], str]
    parameters: dict = field(default_factory=dict)

    def spec(self) -> dict:
        return {
            "type": "function",
            "function": {
                "name": self.name,
                "description": self.description,
                "parameters": self.parameters or {"type": "object", "properties": {}},
            },
        }


class ToolRegistry:
    def __init__(self, tools: list[Tool] | None = None):
        self._tools: dict[str, Tool] = {}
        for tool in tools or []:
            self.register(tool)

    def register(self, tool: Tool) -> None:
        if tool.name in self._tools:
            raise ValidationError(f"tool already registered: {tool.name}")
        self._tools[tool.name] = tool

    def get(self, name: str) -> Tool | None:
        return self._tools.get(name)

    def names(self) -> list[str]:
        return sorted(self._tools)

    def describe(self) -> str:
        return "\n".join(
            f"- {t.name}: {t.description}" for t in sorted(self._tools.values(), key=lambda t: t.name)
        )

    def specs(self) -> list[dict]:
        return [t.spec() for t in sorted(self._tools.values(), key=lambda t: t.name)]


_ACTION_LINE = re.compile(r"^\s*ACTION:\s*(?P<tool>[\w-]+)\s*(?P<args>\{.*\})?\s*$")
_FINAL_LINE = re.compile(r"^\s*FINAL:\s*(?P<status>finished|pending)\b[:,\-]?\s*(?P<summary>.*)$")


def parse_step(message: ChatMessage) -> tuple[str, object]:
    """Classify an agent reply as ("call", (tool, args)), ("final",
    (status, summary)), or ("malformed", reason)."""
    if message.tool_calls:
        call = message.tool_calls[0]
        fn = call.get("function", call)
        name = fn.get("name", "")
        raw_args = fn.get("arguments", {})
        if isinstance(raw_args, str):
            try:
                raw_args = json.loads(raw_args) if raw_args.strip() else {}
            except json.JSONDecodeError:
                return "malformed", "tool call arguments are not valid JSON"
        if not name:
            return "malformed", "tool call without a tool name"
        return "call", (name, raw_args)

    lines = message.content.splitlines()
    for i, line in enumerate(lines):
        final = _FINAL_LINE.match(line)
        if final:
            summary = final.group("summary").strip()
            trailing = "\n".join(lines[i + 1:]).strip()
            if trailing:
                summary = f"{summary}\n{trailing}".strip()
            return "final", (final.group("status"), summary)
        action = _ACTION_LINE.match(line)
        if action:
            raw = action.group("args")
            if raw is None:
                return "call", (action.group("tool"), {})
            try:
                args = json.loads(raw)
            except json.JSONDecodeError:
                return "malformed", f"arguments are not valid JSON: {raw[:80]}"
            if not isinstance(args, dict):
                return "malformed", "arguments must be a JSON object"
            return "call", (action.group("tool"), args)
    return "malformed", "no ACTION or FINAL line found"


def react_loop(
    agent: str,
    tools: ToolRegistry,
    task: str,
    provider: Provider,
    max_steps: int = MAX_STEPS_DEFAULT,
    persona: str = "a diligent assistant",
    on_step: StepCallback | None = None,
    use_wire_tools: bool = False,
) -> Conclusion:
    """Drive one agent through the tool loop.

    Every provider call counts as a step. Unknown tools come back to the
    agent as error observations; two consecutive malformed replies, or the
    step cap, force a pending conclusion.
    """
    if max_steps < 1:
        raise ValidationError("max_steps must be >= 1")
    notify = on_step or (lambda step, kind, payload: None)
    messages = render_prompt(
        "react-executor",
        {"persona": persona, "tools": tools.describe() or "- (none)", "task": task},
    )
    malformed_streak = 0
    last_observation = ""
    for step in range(1, max_steps + 1):
        request = CompletionRequest(
            messages=messages,
            agent=agent,
            tools=tools.specs() if use_wire_tools else None,
        )
        reply = provider.complete(request)
        messages = messages + [reply]
        kind, detail = parse_step(reply)

        if kind == "final":
            status, summary = detail
            notify(step, "conclusion", {"status": status, "summary": summary})
            return Conclusion(
                status=ConclusionStatus(status),
                summary=summary or reply.content.strip(),
                steps_used=step,
            )

        if kind == "call":
            malformed_streak = 0
            name, args = detail
            call = ToolCall(tool=name, arguments=args, step=step)
            tool = tools.get(call.tool)
            if tool is None:
                observation = f"error: unknown tool {call.tool!r}; available: {', '.join(tools.names())}"
            else:
                try:
                    observation = tool.fn(call.arguments)
                except Exception as exc:  # tool bugs become observations, not crashes
                    observation = f"error: {exc}"
            notify(
                step,
                "tool_call",
                {"tool": call.tool, "arguments": call.arguments, "observation": observation},
            )
            last_observation = observation
            messages = messages + [
                ChatMessage(role="tool", content=observation, name=call.tool)
            ]
            continue

        malformed_streak += 1
        reason = str(detail)
        notify(step, "malformed", {"reason": reason})
        if malformed_streak >= 2:
            summary = f"stopped after repeated malformed replies: {reason}"
            notify(step, "conclusion", {"status": "pending", "summary": summary})
            return Conclusion(
                status=ConclusionStatus.PENDING, summary=summary, steps_used=step
            )
        messages = messages + [
            ChatMessage(
                role="user",
                content=(
                    "Your reply was malformed. Use 'ACTION: tool {\"arg\": ...}' to "
                    "call a tool or 'FINAL: finished|pending <conclusion>' to stop."
                ),
            )
        ]

    summary = "step cap reached without a conclusion"
    if last_observation:
        summary += f"; last observation: {last_observation[:200]}"
    notify(max_steps, "conclusion", {"status": "pending", "summary": summary})
    return Conclusion(status=ConclusionStatus.PENDING, summary=summary, steps_used=max_steps)


# --- built-in tools ---------------------------------------------------------

_BIN_OPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.FloorDiv: operator.floordiv,
    ast.Mod: operator.mod,
    ast.Pow: operator.pow,
}
_UNARY_OPS = {ast.UAdd: operator.pos, ast.USub: operator.neg}


def _eval_node(node: ast.AST):
    if isinstance(node, ast.Expression):
        return _eval_node(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return node.value
    if isinstance(node, ast.BinOp) and type(node.op) in _BIN_OPS:
        return _BIN_OPS[type(node.op)](_eval_node(node.left), _eval_node(node.right))
    if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY_OPS:
        return _UNARY_OPS[type(node.op)](_eval_node(node.operand))
    raise ValueError(f"unsupported expression element: {ast.dump(node)[:60]}")


def evaluate_expression(expr: str) -> str:
    """Arithmetic-only expression evaluation (no names, no calls)."""
    try:
        tree = ast.parse(expr, mode="eval")
        result = _eval_node(tree)
    except (SyntaxError, ValueError, ZeroDivisionError, OverflowError) as exc:
        return f"error: {exc}"
    if isinstance(result, float) and result.is_integer():
        return str(int(result))
    return str(result)


def calculator_tool() -> Tool:
    return Tool(
        name="calculator",
        description="Evaluate an arithmetic expression, e.g. (3 + 5) * 2.",
        fn=lambda args: evaluate_expression(str(args.get("expr", ""))),
        parameters={
            "type": "object",
            "properties": {"expr": {"type": "string"}},
            "required": ["expr"],
        },
    )


def file_fetch_tool(corpus: dict[str, str] | Path) -> Tool:
    """Local corpus lookup standing in for live web search."""

    def fetch(args: dict) -> str:
        key = str(args.get("name", "")).strip()
        if not key:
            return "error: missing 'name' argument"
        if isinstance(corpus, dict):
            if key in corpus:
                return corpus[key]
            return f"error: no document named {key!r}; available: {', '.join(sorted(corpus))}"
        path = Path(corpus) / f"{key}.txt"
        if path.is_file():
            return path.read_text(encoding="utf-8")
        names = sorted(p.stem for p in Path(corpus).glob("*.txt"))
        return f"error: no document named {key!r}; available: {', '.join(names)}"

    return Tool(
        name="file_fetch",
        description="Fetch a document from the local corpus by name.",
        fn=fetch,
        parameters={
            "type": "object",
            "properties": {"name": {"type": "string"}},
            "required": ["name"],
        },
    )


def code_runner_tool(limits: SandboxLimits | None = None) -> Tool:
    return Tool(
        name="code_runner",
        description="Run a short Python snippet in a sandbox and return its output.",
        fn=lambda args: run_snippet(str(args.get("code", "")), limits),
        parameters={
            "type": "object",
            "properties": {"code": {"type": "string"}},
            "required": ["code"],
        },
    )


def default_registry(corpus: dict[str, str] | Path | None = None) -> ToolRegistry:
    tools = [calculator_tool(), code_runner_tool()]
    if corpus is not None:
        tools.append(file_fetch_tool(corpus))
    return ToolRegistry(tools)
