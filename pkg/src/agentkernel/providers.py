"""Completion providers: a deterministic scripted backend and an HTTP client
speaking the OpenAI-compatible chat-completions wire protocol."""

from __future__ import annotations

import logging
import os
import threading
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Protocol

import httpx

from .errors import (
    ProviderError,
    RetryExhaustedError,
    ScriptExhaustedError,
    ValidationError,
)

log = logging.getLogger(__name__)

API_KEY_ENV = "AGENTKERNEL_API_KEY"
WILDCARD = "*"


@dataclass
class ChatMessage:
    """One chat turn. ``name`` identifies the speaking agent or tool."""

    role: str
    content: str
    name: str | None = None
    tool_calls: list[dict[str, Any]] | None = None

    def __post_init__(self):
        if self.role not in ("system", "user", "assistant", "tool"):
            raise ValidationError(f"unknown message role: {self.role}")
        if not self.content and self.role != "tool" and not self.tool_calls:
            raise ValidationError("message content must be non-empty")

    def to_wire(self) -> dict[str, Any]:
        d: dict[str, Any] = {"role": self.role, "content": self.content}
        if self.name:
            d["name"] = self.name
        return d


@dataclass
class CompletionRequest:
    """A single completion call.

    ``agent`` is engine-side routing metadata (which group member is asking);
    it never reaches the wire.
    """

    messages: list[ChatMessage]
    model: str = "default"
    temperature: float = 0.0
    max_tokens: int | None = None
    tools: list[dict[str, Any]] | None = None
    agent: str | None = None

    def __post_init__(self):
        if not self.messages:
            raise ValidationError("request must contain at least one message")
        if self.messages[0].role not in ("system", "user"):
            raise ValidationError("first message must be system or user")
        if self.temperature < 0:
            raise ValidationError("temperature must be >= 0")


class Provider(Protocol):
    def complete(self, request: CompletionRequest) -> ChatMessage: ...


@dataclass(frozen=True)
class ScriptEntry:
    agent: str  # agent name, or "*" to match any agent
    response: str


class ScriptedProvider:
    """Plays back a fixed script: for each call, the next unconsumed entry
    keyed by the requesting agent (exact name first, then wildcard).

    Exhaustion is a hard error, never silent recycling. Cursor updates are
    serialized so interleaved runs consume entries atomically.
    """

    def __init__(self, entries: list[ScriptEntry] | list[tuple[str, str]]):
        self._entries = [
            e if isinstance(e, ScriptEntry) else ScriptEntry(*e) for e in entries
        ]
        self._consumed = [False] * len(self._entries)
        self._calls = 0
        self._lock = threading.Lock()

    @classmethod
    def from_dicts(cls, raw: list[dict[str, str]]) -> "ScriptedProvider":
        return cls([ScriptEntry(d["agent"], d["response"]) for d in raw])

    @property
    def calls(self) -> int:
        return self._calls

    def remaining(self) -> int:
        return sum(1 for c in self._consumed if not c)

    def complete(self, request: CompletionRequest) -> ChatMessage:
        agent = request.agent or WILDCARD
        with self._lock:
            self._calls += 1
            index = self._find(agent)
            if index is None:
                index = self._find(WILDCARD)
            if index is None:
                cursor = sum(
                    1
                    for i, e in enumerate(self._entries)
                    if self._consumed[i] and e.agent in (agent, WILDCARD)
                )
                raise ScriptExhaustedError(agent, cursor)
            self._consumed[index] = True
            entry = self._entries[index]
        return ChatMessage(role="assistant", content=entry.response, name=agent)

    def _find(self, key: str) -> int | None:
        for i, entry in enumerate(self._entries):
            if not self._consumed[i] and entry.agent == key:
                return i
        return None


class HttpProvider:
    """OpenAI-compatible chat-completions client.

    POSTs to ``{base_url}/chat/completions`` with bearer auth read from the
    AGENTKERNEL_API_KEY environment variable (or an explicit ``api_key``).
    """

    RETRYABLE_STATUSES = frozenset({429, 500, 502, 503, 504})

    def __init__(
        self,
        base_url: str,
        model: str,
        api_key: str | None = None,
        temperature: float = 0.0,
        timeout: float = 60.0,
        transport: httpx.BaseTransport | None = None,
    ):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.temperature = temperature
        self._api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV, "")
        self._client = httpx.Client(timeout=timeout, transport=transport)

    def build_body(self, request: CompletionRequest) -> dict[str, Any]:
        body: dict[str, Any] = {
            "model": request.model if request.model != "default" else self.model,
            "messages": [m.to_wire() for m in request.messages],
            "temperature": request.temperature,
        }
        if request.max_tokens is not None:
            body["max_tokens"] = request.max_tokens
        if request.tools:
            body["tools"] = request.tools
        return body

    def complete(self, request: CompletionRequest) -> ChatMessage:
        url = f"{self.base_url}/chat/completions"
        headers = {"Authorization": f"Bearer {self._api_key}"}
        try:
            response = self._client.post(url, json=self.build_body(request), headers=headers)
        except httpx.TimeoutException as exc:
            raise ProviderError(f"request timed out: {exc}", retryable=True) from exc
        except httpx.HTTPError as exc:
            raise ProviderError(f"transport failure: {exc}", retryable=True) from exc
        if response.status_code in self.RETRYABLE_STATUSES:
            raise ProviderError(
                f"backend returned {response.status_code}", retryable=True
            )
        if response.status_code >= 400:
            raise ProviderError(
                f"backend rejected request: {response.status_code} {response.text[:200]}",
                retryable=False,
            )
        try:
            data = response.json()
            choice = data["choices"][0]["message"]
        except (ValueError, KeyError, IndexError) as exc:
            raise ProviderError(f"malformed backend response: {exc}", retryable=False) from exc
        return ChatMessage(
            role="assistant",
            content=choice.get("content") or "",
            name=request.agent,
            tool_calls=choice.get("tool_calls"),
        )

    def close(self) -> None:
        self._client.close()


@dataclass
class RetryPolicy:
    max_retries: int = 2
    base_delay: float = 0.5

    def __post_init__(self):
        if self.max_retries < 0:
            raise ValidationError("max_retries must be >= 0")
        if self.base_delay < 0:
            raise ValidationError("base_delay must be >= 0")


def with_retry(
    provider: Provider,
    request: CompletionRequest,
    policy: RetryPolicy | None = None,
    sleep: Callable[[float], None] = time.sleep,
) -> ChatMessage:
    """Call the provider with exponential backoff on retryable failures.

    At most ``max_retries + 1`` attempts; the delay doubles per attempt
    starting at ``base_delay``. Non-retryable errors propagate immediately.
    """
    policy = policy or RetryPolicy()
    outcomes: list[str] = []
    delay = policy.base_delay
    for attempt in range(policy.max_retries + 1):
        try:
            return provider.complete(request)
        except ProviderError as exc:
            if not exc.retryable:
                raise
            outcomes.append(str(exc))
            log.debug("retryable provider failure (attempt %d): %s", attempt + 1, exc)
            if attempt < policy.max_retries:
                sleep(delay)
                delay *= 2
    raise RetryExhaustedError(outcomes)


@dataclass
class RetryingProvider:
    """Provider wrapper that applies a retry policy to every call."""

    inner: Provider
    policy: RetryPolicy = field(default_factory=RetryPolicy)
    sleep: Callable[[float], None] = time.sleep

    def complete(self, request: CompletionRequest) -> ChatMessage:
        return with_retry(self.inner, request, self.policy, self.sleep)
