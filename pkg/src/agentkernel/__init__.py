"""agentkernel: round-based multi-agent orchestration.

A run iterates recruit, decide, execute, evaluate; rejected rounds feed their
verbal feedback into the next round's recruitment. Providers are pluggable,
with a deterministic scripted backend for fully offline runs and replay.
"""

from .decision import (
    Discussion,
    GroupDecision,
    Review,
    Termination,
    decide_horizontal,
    decide_single,
    decide_vertical,
    detect_consensus,
)
from .errors import (
    AgentKernelError,
    ConfigurationError,
    IntegrityError,
    ParseError,
    PromptError,
    ProviderError,
    RetryExhaustedError,
    SandboxError,
    ScriptExhaustedError,
    StateConflictError,
    ValidationError,
)
from .evaluation import (
    CheckerKind,
    evaluate_agent,
    evaluate_human,
    evaluate_programmatic,
    terminal_feedback_source,
)
from .events import EventLog, StageEvent, canonical_json, check_sequence
from .execution import (
    AnswerEnv,
    CodeEnv,
    Conclusion,
    ConclusionStatus,
    CraftingEnv,
    CraftingWorld,
    Environment,
    ExecutionReport,
    SandboxLimits,
    TestReport,
    Tool,
    ToolEnv,
    ToolRegistry,
    concept_coverage,
    crafting_step,
    execute,
    execute_crafting_assignments,
    load_world,
    react_loop,
    run_unit_tests,
)
from .harness import (
    Suite,
    SuiteResult,
    TaskOutcome,
    TaskSpec,
    compare_setups,
    load_builtin_suite,
    load_suite_file,
    render_comparison,
    run_benchmark,
    scripted_factory,
)
from .kernel import Kernel, resume_run, run_pipeline
from .persistence import (
    InMemoryEventStore,
    JsonlEventStore,
    replay,
    replay_events,
    tee_sinks,
)
from .prompts import render_prompt
from .providers import (
    ChatMessage,
    CompletionRequest,
    HttpProvider,
    RetryingProvider,
    RetryPolicy,
    ScriptedProvider,
    with_retry,
)
from .records import RoundRecord, RunRecord, record_projection
from .recruitment import RecruitmentOutcome, manual_group, recruit
from .types import (
    EvaluatorKind,
    ExpertProfile,
    Goal,
    RunConfig,
    RunStatus,
    Setup,
    Stage,
    Structure,
    TaskKind,
    Verdict,
)

__version__ = "0.1.0"
