#!/usr/bin/env python3
"""Benchmark the bundled math suite under all three setups with oracle
scripts and print the comparison table."""

from agentkernel.harness import (
    compare_setups,
    load_builtin_suite,
    render_comparison,
    run_benchmark,
    scripted_factory,
)
from agentkernel.types import Setup

# Planted mistakes per setup, to make the comparison table non-trivial.
WRONG = {
    Setup.COT: {"math_02", "math_05", "math_08"},
    Setup.SOLO: {"math_05"},
    Setup.GROUP: set(),
}


def scripts_for(suite, setup):
    book = {}
    for task in suite.tasks:
        answer = task.gold["answer"]
        value = answer + 1 if task.id in WRONG[setup] else answer
        line = f"working through it, the answer is {value}"
        if setup is Setup.COT:
            book[task.id] = [{"agent": "*", "response": line}]
        elif setup is Setup.SOLO:
            # entries for every round, so a wrong answer retires after the
            # round cap instead of exhausting the script
            book[task.id] = [
                {"agent": "recruiter", "response": "1. Solver: careful arithmetic"},
                {"agent": "Solver", "response": line},
            ] * 3
        else:
            book[task.id] = [
                {
                    "agent": "recruiter",
                    "response": "1. Solver: careful arithmetic\n2. Checker: verifies results",
                },
                {"agent": "Solver", "response": line},
                {"agent": "Checker", "response": "APPROVE"},
            ] * 3
    return book


def main():
    suite = load_builtin_suite("math10")
    results = []
    for setup in (Setup.COT, Setup.SOLO, Setup.GROUP):
        factory = scripted_factory(scripts_for(suite, setup))
        result = run_benchmark(suite, setup, factory)
        results.append(result)
        print(f"{setup.value}: aggregate accuracy {result.aggregate:.3f}")
    print()
    print(render_comparison(compare_setups(results)))


if __name__ == "__main__":
    main()
