from .base import (
    AnswerEnv,
    CodeEnv,
    CraftingEnv,
    Environment,
    ExecutionReport,
    ToolEnv,
    execute,
    extract_code_block,
)
from .coverage import concept_coverage, word_forms
from .crafting import (
    ATTEMPT_CAP_DEFAULT,
    CraftingWorld,
    Recipe,
    SubTaskResult,
    crafting_step,
    execute_crafting_assignments,
    load_world,
    parse_subgoals,
)
from .react import (
    Conclusion,
    ConclusionStatus,
    Tool,
    ToolRegistry,
    calculator_tool,
    code_runner_tool,
    default_registry,
    file_fetch_tool,
    react_loop,
)
from .sandbox import SandboxLimits, TestReport, run_snippet, run_unit_tests

__all__ = [
    "AnswerEnv",
    "CodeEnv",
    "CraftingEnv",
    "Environment",
    "ExecutionReport",
    "ToolEnv",
    "execute",
    "extract_code_block",
    "concept_coverage",
    "word_forms",
    "ATTEMPT_CAP_DEFAULT",
    "CraftingWorld",
    "Recipe",
    "SubTaskResult",
    "crafting_step",
    "execute_crafting_assignments",
    "load_world",
    "parse_subgoals",
    "Conclusion",
    "ConclusionStatus",
    "Tool",
    "ToolRegistry",
    "calculator_tool",
    "code_runner_tool",
    "default_registry",
    "file_fetch_tool",
    "react_loop",
    "SandboxLimits",
    "TestReport",
    "run_snippet",
    "run_unit_tests",
]
