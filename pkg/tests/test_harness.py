import random

import pytest

from agentkernel.errors import ConfigurationError
from agentkernel.harness import (
    Suite,
    TaskSpec,
    compare_setups,
    load_builtin_suite,
    recompute_aggregate,
    render_comparison,
    run_benchmark,
    run_task,
    scripted_factory,
)
from agentkernel.types import Setup


def math_suite():
    return load_builtin_suite("math10")


def oracle_scripts(suite, wrong_ids=()):
    book = {}
    for task in suite.tasks:
        answer = task.gold["answer"]
        shown = answer + 1 if task.id in wrong_ids else answer
        book[task.id] = [{"agent": "*", "response": f"after working it out, the answer is {shown}"}]
    return book


class TestBuiltinSuites:
    def test_all_bundled_suites_load_and_validate(self):
        for name in ("math10", "concepts10", "code10", "crafting3"):
            suite = load_builtin_suite(name)
            assert len(suite.tasks) in (3, 10)
            for task in suite.tasks:
                task.validate()
                task.build_env()

    def test_unknown_suite_rejected(self):
        with pytest.raises(ConfigurationError):
            load_builtin_suite("nope")

    def test_duplicate_task_ids_rejected(self):
        task = math_suite().tasks[0]
        with pytest.raises(ConfigurationError):
            Suite(suite_id="dup", tasks=[task, task])


class TestTaskSpecValidation:
    def test_gold_must_match_kind(self):
        with pytest.raises(ConfigurationError) as excinfo:
            TaskSpec(id="x", goal="g", kind="math", gold={"tests": "def test_a(): pass"})
        assert "answer" in str(excinfo.value)

    def test_crafting_needs_world(self):
        with pytest.raises(ConfigurationError):
            TaskSpec(id="x", goal="g", kind="crafting", gold={"crafting": {"item": "paper"}})

    def test_empty_gold_rejected(self):
        with pytest.raises(ConfigurationError):
            TaskSpec(id="x", goal="g", kind="math", gold={})


class TestBenchmark:
    def test_oracle_script_scores_perfect(self):
        suite = math_suite()
        factory = scripted_factory(oracle_scripts(suite))
        result = run_benchmark(suite, Setup.COT, factory)
        assert result.aggregate == 1.0
        assert all(o.metric == 1.0 for o in result.outcomes)

    def test_three_planted_wrong_answers_score_point_seven(self):
        suite = math_suite()
        wrong = {"math_02", "math_05", "math_09"}
        factory = scripted_factory(oracle_scripts(suite, wrong_ids=wrong))
        result = run_benchmark(suite, Setup.COT, factory)
        assert result.aggregate == pytest.approx(0.7)
        for outcome in result.outcomes:
            assert outcome.metric == (0.0 if outcome.task_id in wrong else 1.0)

    def test_solo_setup_full_pipeline(self):
        suite = math_suite()
        book = {}
        for task in suite.tasks:
            answer = task.gold["answer"]
            book[task.id] = [
                {"agent": "recruiter", "response": "1. Solver: careful arithmetic"},
                {"agent": "Solver", "response": f"the result is {answer}"},
            ]
        result = run_benchmark(suite, Setup.SOLO, scripted_factory(book))
        assert result.aggregate == 1.0
        assert all(o.status == "solved" for o in result.outcomes)

    def test_aborting_task_does_not_stop_suite(self):
        suite = math_suite()
        scripts = oracle_scripts(suite)
        scripts["math_03"] = []  # instant script exhaustion
        result = run_benchmark(suite, Setup.COT, scripted_factory(scripts))
        by_id = {o.task_id: o for o in result.outcomes}
        assert by_id["math_03"].status == "aborted"
        assert by_id["math_03"].metric == 0.0
        assert result.aggregate == pytest.approx(0.9)

    def test_cot_on_crafting_is_configuration_error(self):
        suite = load_builtin_suite("crafting3")
        factory = scripted_factory({t.id: t.script_entries() for t in suite.tasks})
        with pytest.raises(ConfigurationError):
            run_benchmark(suite, Setup.COT, factory)

    def test_group_crafting_assignments_present_in_record(self):
        suite = load_builtin_suite("crafting3")
        task = suite.task("craft_paper")
        outcome, record = run_task(
            task, Setup.GROUP, scripted_factory({task.id: task.script_entries()})(task.id)
        )
        assert outcome.solved
        assert record.rounds[0].decision.assignments  # per-agent split exists

    def test_order_independence_under_scripted_provider(self):
        suite = math_suite()
        wrong = {"math_04"}
        scripts = oracle_scripts(suite, wrong_ids=wrong)
        base = run_benchmark(suite, Setup.COT, scripted_factory(scripts))
        shuffled_tasks = list(suite.tasks)
        random.Random(3).shuffle(shuffled_tasks)
        shuffled = run_benchmark(
            Suite(suite_id=suite.suite_id, tasks=shuffled_tasks),
            Setup.COT,
            scripted_factory(scripts),
        )
        assert {o.task_id: o.metric for o in base.outcomes} == {
            o.task_id: o.metric for o in shuffled.outcomes
        }

    def test_parallel_execution_matches_serial(self):
        suite = math_suite()
        scripts = oracle_scripts(suite, wrong_ids={"math_07"})
        serial = run_benchmark(suite, Setup.COT, scripted_factory(scripts), parallelism=1)
        parallel = run_benchmark(suite, Setup.COT, scripted_factory(scripts), parallelism=4)
        assert [o.task_id for o in parallel.outcomes] == [o.task_id for o in serial.outcomes]
        assert [o.metric for o in parallel.outcomes] == [o.metric for o in serial.outcomes]

    def test_aggregate_recomputable_from_outcomes(self):
        suite = math_suite()
        result = run_benchmark(
            suite, Setup.COT, scripted_factory(oracle_scripts(suite, wrong_ids={"math_01"}))
        )
        assert result.aggregate == recompute_aggregate(result.outcomes)
        manual = sum(o.metric for o in result.outcomes) / len(result.outcomes)
        assert result.aggregate == pytest.approx(manual)


class TestCodeAndConceptSuites:
    def test_code_suite_with_correct_solutions(self):
        suite = load_builtin_suite("code10")
        solutions = {
            "code_01": "def add(a, b):\n    return a + b",
            "code_02": "def is_even(n):\n    return n % 2 == 0",
            "code_03": "def reverse_string(s):\n    return s[::-1]",
        }
        picked = Suite(
            suite_id="code3", tasks=[t for t in suite.tasks if t.id in solutions]
        )
        book = {
            task_id: [{"agent": "*", "response": f"```python\n{code}\n```"}]
            for task_id, code in solutions.items()
        }
        result = run_benchmark(picked, Setup.COT, scripted_factory(book))
        assert result.aggregate == 1.0

    def test_concept_suite_partial_coverage_metric(self):
        suite = load_builtin_suite("concepts10")
        task = suite.task("gen_01")  # dog, run, park, ball
        provider = scripted_factory(
            {"gen_01": [{"agent": "*", "response": "The dog runs in the park."}]}
        )("gen_01")
        outcome, _ = run_task(task, Setup.COT, provider)
        assert outcome.metric == pytest.approx(0.75)
        assert not outcome.solved


class TestComparisons:
    def build_results(self):
        suite = math_suite()
        cot = run_benchmark(suite, Setup.COT, scripted_factory(oracle_scripts(suite)))
        wrong = run_benchmark(
            suite,
            Setup.SOLO,
            scripted_factory(
                {
                    t.id: [
                        {"agent": "recruiter", "response": "1. Solver: arithmetic"},
                        {"agent": "Solver", "response": f"answer {t.gold['answer'] + (1 if t.id == 'math_01' else 0)}"},
                        {"agent": "recruiter", "response": "1. Solver: arithmetic"},
                        {"agent": "Solver", "response": f"answer {t.gold['answer'] + (1 if t.id == 'math_01' else 0)}"},
                        {"agent": "recruiter", "response": "1. Solver: arithmetic"},
                        {"agent": "Solver", "response": f"answer {t.gold['answer'] + (1 if t.id == 'math_01' else 0)}"},
                    ]
                    for t in suite.tasks
                }
            ),
        )
        return [cot, wrong]

    def test_table_shape_and_aggregates(self):
        results = self.build_results()
        table = compare_setups(results)
        assert table["setups"] == ["cot", "solo"]
        assert len(table["rows"]) == 10
        assert table["aggregates"]["cot"] == 1.0
        assert table["aggregates"]["solo"] == pytest.approx(0.9)
        for row in table["rows"]:
            for setup in table["setups"]:
                assert setup in row

    def test_aggregates_match_manual_recomputation(self):
        results = self.build_results()
        table = compare_setups(results)
        for result in results:
            manual = sum(o.metric for o in result.outcomes) / len(result.outcomes)
            assert table["aggregates"][result.setup] == pytest.approx(manual)

    def test_rendered_table_is_aligned(self):
        table = compare_setups(self.build_results())
        text = render_comparison(table)
        lines = text.splitlines()
        assert len(lines) == 1 + 1 + 10 + 1  # header, rule, tasks, aggregate
        assert len({len(line) for line in lines if line}) <= 2

    def test_empty_results_rejected(self):
        with pytest.raises(ConfigurationError):
            compare_setups([])

    def test_mismatched_suites_rejected(self):
        suite = math_suite()
        result = run_benchmark(suite, Setup.COT, scripted_factory(oracle_scripts(suite)))
        other = run_benchmark(
            Suite(suite_id="other", tasks=suite.tasks[:2]),
            Setup.COT,
            scripted_factory(oracle_scripts(suite)),
        )
        with pytest.raises(ConfigurationError):
            compare_setups([result, other])
