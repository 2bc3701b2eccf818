"""Exception hierarchy shared across the engine."""


class AgentKernelError(Exception):
    """Base class for all engine errors."""


class ConfigurationError(AgentKernelError):
    """Invalid configuration: bad run config, task spec, or environment wiring."""


class ValidationError(AgentKernelError):
    """A domain object violates one of its invariants."""


class PromptError(AgentKernelError):
    """Template missing or a placeholder left unbound."""


class ProviderError(AgentKernelError):
    """A completion backend failed.

    ``retryable`` distinguishes transient transport trouble (timeouts,
    429/5xx) from permanent failures (bad request, exhausted script).
    """

    def __init__(self, message: str, *, retryable: bool = False):
        super().__init__(message)
        self.retryable = retryable


class ScriptExhaustedError(ProviderError):
    """Scripted provider ran out of entries for an agent."""

    def __init__(self, agent: str, cursor: int):
        super().__init__(
            f"script exhausted for agent {agent!r} after {cursor} consumed entries",
            retryable=False,
        )
        self.agent = agent
        self.cursor = cursor


class RetryExhaustedError(ProviderError):
    """All retry attempts failed; carries the per-attempt outcomes."""

    def __init__(self, attempts: list[str]):
        lines = "; ".join(f"attempt {i + 1}: {msg}" for i, msg in enumerate(attempts))
        super().__init__(f"all {len(attempts)} attempts failed ({lines})", retryable=False)
        self.attempts = attempts


class ParseError(AgentKernelError):
    """An agent response did not match the documented grammar.

    ``raw`` keeps the offending text for feedback and debugging.
    """

    def __init__(self, message: str, raw: str = ""):
        super().__init__(message)
        self.raw = raw


class SandboxError(AgentKernelError):
    """Sandbox infrastructure failure (spawn, plumbing), not a test failure."""


class IntegrityError(AgentKernelError):
    """A persisted transcript is corrupt or has a sequence gap."""

    def __init__(self, message: str, seq: int | None = None):
        super().__init__(message)
        self.seq = seq


class StateConflictError(AgentKernelError):
    """Operation rejected because the run is not in the required state."""
