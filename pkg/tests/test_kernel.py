import os
import subprocess
import sys

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from hcplan.grounding import problem_for
from hcplan.kernel import BACKEND, FALSE, TRUE, CondSpec, PyKernel, available_backends, holds
from hcplan.reference import reference_applicable, reference_apply
from hcplan.tasks import compile_condition

BACKENDS = available_backends()


def test_backend_selection_flag():
    code = "import hcplan.kernel as k; print(k.BACKEND)"
    env = {**os.environ, "HCPLAN_PURE_PYTHON": "1"}
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
    assert BACKEND in BACKENDS
    assert "python" in BACKENDS


def test_holds_semantics():
    assert holds(0, TRUE) and not holds(0, FALSE)
    c = CondSpec(pos=0b1, neg=0b10, clauses=(((0b1100, True),), ((0b10000, False),)))
    assert holds(0b0101, c)
    assert not holds(0b0001, c)  # no bit of the clause mask
    assert not holds(0b0111, c)  # a neg bit set
    assert not holds(0b10101, c)  # negative literal violated
    assert TRUE.trivially_true and FALSE.trivially_false


@pytest.fixture(scope="module")
def problems(desk):
    return {name: problem_for(desk, kernel_cls=cls) for name, cls in BACKENDS.items()}


walks = st.lists(st.integers(min_value=0, max_value=10_000), min_size=0, max_size=12)


@settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(choices=walks)
def test_kernels_agree_on_random_walks(problems, desk, choices):
    ref = problems["python"]
    bits = {n: p.encode(desk) for n, p in problems.items()}
    for c in choices:
        lists = {n: p.applicable(bits[n]) for n, p in problems.items()}
        assert len({tuple(v) for v in lists.values()}) == 1
        options = lists["python"]
        if not options:
            break
        a = options[c % len(options)]
        for n, p in problems.items():
            bits[n] = p.kernel.apply(bits[n], a)
        assert len(set(bits.values())) == 1
        assert ref.kernel.closure(bits["python"]) == bits["python"]


@settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(choices=st.lists(st.integers(min_value=0, max_value=10_000), min_size=1, max_size=6))
def test_compiled_matches_reference_interpreter(desk, choices):
    problem = problem_for(desk)
    state = desk
    bits = problem.encode(desk)
    for c in choices:
        compiled = [problem.actions[i] for i in problem.applicable(bits)]
        assert sorted(compiled) == sorted(reference_applicable(state))
        action = compiled[c % len(compiled)]
        state = reference_apply(state, action)
        bits = problem.kernel.apply(bits, problem.lookup(action))
        assert problem.decode(bits).atoms == state.atoms


@pytest.mark.parametrize("task_name,length", [("watch_tv", 3), ("make_toast", 4)])
def test_search_agrees_across_kernels(problems, desk, pack, task_name, length):
    task = pack[task_name]
    results = []
    for p in problems.values():
        res = p.kernel.search(p.encode(desk), compile_condition(task.goal, p), None, 20, 1_000_000)
        assert res.found and not res.capped and len(res.plan) == length
        results.append((res.plan, res.expanded))
    assert len({(tuple(pl), e) for pl, e in results}) == 1


def test_search_cap_and_bound(problems, desk, pack):
    p = problems["python"]
    goal = compile_condition(pack["bring_items_to_coffeetable"].goal, p)
    capped = p.kernel.search(p.encode(desk), goal, None, 20, 50)
    assert capped.capped and not capped.found
    short = p.kernel.search(p.encode(desk), goal, None, 2, 1_000_000)
    assert not short.found and not short.capped


def test_search_goal_at_start(problems, desk):
    for p in problems.values():
        res = p.kernel.search(p.encode(desk), TRUE, None, 20, 10)
        assert res.found and res.plan == [] and res.expanded == 0


def test_failure_states_are_not_expanded(problems, desk):
    for p in problems.values():
        res = p.kernel.search(p.encode(desk), FALSE, TRUE, 5, 1000)
        assert not res.found and res.expanded == 0


def test_pykernel_is_exported():
    assert BACKENDS["python"] is PyKernel
