#!/usr/bin/env python3
"""Run the three bundled crafting scenarios offline and narrate each round."""

from agentkernel import Kernel, ScriptedProvider
from agentkernel.harness import load_builtin_suite
from agentkernel.types import Setup


def narrate(task, record, env):
    print(f"\n=== {task.id}: {task.goal}")
    for round_record in record.rounds:
        print(f"  round {round_record.index}:")
        if round_record.decision:
            for agent, assignment in round_record.decision.assignments.items():
                print(f"    {agent}: {assignment}")
        if round_record.report:
            print(f"    execution: {round_record.report.summary}")
        if round_record.verdict:
            mark = "solved" if round_record.verdict.solved else "rejected"
            print(f"    verdict: {mark}")
            if round_record.verdict.feedback:
                print(f"      feedback: {round_record.verdict.feedback[:120]}")
    inventories = {
        name: dict(sorted((+state.inventory).items()))
        for name, state in env.world.agents.items()
    }
    print(f"  final status: {record.status.value}; inventories: {inventories}")


def main():
    suite = load_builtin_suite("crafting3")
    for task in suite.tasks:
        env = task.build_env()
        kernel = Kernel()
        record = kernel.start(
            task.build_config(Setup.GROUP),
            task.to_goal(),
            env,
            ScriptedProvider.from_dicts(task.script_entries()),
            manual_profiles=task.manual_profiles(),
        )
        narrate(task, record, env)


if __name__ == "__main__":
    main()
