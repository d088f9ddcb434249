"""Breadth-first plan search and plan validation, used to certify tasks."""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field
from typing import Sequence

from .actions import GroundedAction, SchemaLedger, bundled_ledger, format_action
from .env import EnvironmentState, RuleSet
from .errors import ConfigError, ResourceLimitError
from .grounding import problem_for
from .search import replay
from .tasks import Status, TaskDefinition, TaskPack, classify, compile_condition

DEFAULT_MAX_STATES = 6_000_000

_MEMO: dict[tuple, tuple] = {}
_MEMO_LOCK = threading.Lock()


def shortest_plan(problem, bits: int, task: TaskDefinition, bound: int = 20,
                  max_states: int = DEFAULT_MAX_STATES):
    """Kernel search from ``bits``, memoized per problem and start state."""
    key = (id(problem), bits, str(task.goal), str(task.failure), bound, max_states)
    with _MEMO_LOCK:
        hit = _MEMO.get(key)
    if hit is not None and hit[0] is problem:
        return hit[1], hit[2]
    goal = compile_condition(task.goal, problem)
    failure = compile_condition(task.failure, problem) if task.failure else None
    start = time.perf_counter()
    res = problem.kernel.search(bits, goal, failure, bound, max_states)
    elapsed = time.perf_counter() - start
    with _MEMO_LOCK:
        # the problem is kept alive by the entry, so its id cannot be reused
        _MEMO[key] = (problem, res, elapsed)
    return res, elapsed


@dataclass
class OracleReport:
    task: str
    solvable_within_bound: bool
    min_length: int | None
    witness_plan: list[GroundedAction] | None
    states_expanded: int
    bound: int
    states_generated: int = 0
    capped: bool = False
    seconds: float = 0.0

    def to_dict(self) -> dict:
        return {
            "task": self.task,
            "solvable_within_bound": self.solvable_within_bound,
            "min_length": self.min_length,
            "witness_plan": [format_action(a) for a in self.witness_plan] if self.witness_plan is not None else None,
            "states_expanded": self.states_expanded,
            "states_generated": self.states_generated,
            "bound": self.bound,
            "capped": self.capped,
        }


def min_plan_search(env: EnvironmentState, task: TaskDefinition, ledger: SchemaLedger | None = None,
                    bound: int = 20, max_states: int = DEFAULT_MAX_STATES, rules: RuleSet | None = None,
                    kernel_cls=None) -> OracleReport:
    """Shortest plan within ``bound``; failure states are never expanded.

    A search that hits ``max_states`` reports ``capped=True`` rather than
    claiming unsolvability.
    """
    if bound < 1:
        raise ConfigError("bound must be at least 1")
    problem = problem_for(env, ledger or bundled_ledger(), rules, kernel_cls)
    res, elapsed = shortest_plan(problem, problem.encode(env), task, bound, max_states)
    plan = [problem.actions[i] for i in res.plan] if res.found else None
    return OracleReport(task.name, res.found, len(plan) if plan is not None else None, plan,
                        res.expanded, bound, res.generated, res.capped, elapsed)


@dataclass
class ValidationReport:
    executable: bool
    failing_step: int | None
    classification: Status
    reached: EnvironmentState = field(repr=False, default=None)
    reason: str | None = None

    def to_dict(self) -> dict:
        return {
            "executable": self.executable,
            "failing_step": self.failing_step,
            "classification": self.classification.value,
            "reason": self.reason,
        }


def validate_plan(env: EnvironmentState, plan: Sequence[GroundedAction], task: TaskDefinition,
                  ledger: SchemaLedger | None = None, rules: RuleSet | None = None) -> ValidationReport:
    ledger = ledger or bundled_ledger()
    failing, reached = replay(env, plan, ledger, rules)
    reason = None
    if failing is not None:
        from .reference import failed_precondition

        reason = failed_precondition(reached, plan[failing], ledger) or "not applicable"
    return ValidationReport(failing is None, failing, classify(reached, task), reached, reason)


def order_tasks_by_min_length(pack: TaskPack, env: EnvironmentState, ledger: SchemaLedger | None = None,
                              bound: int = 20, max_states: int = DEFAULT_MAX_STATES
                              ) -> tuple[list[TaskDefinition], dict[str, OracleReport]]:
    """Stable sort of the pack by oracle minimum length."""
    reports = {t.name: min_plan_search(env, t, ledger, bound, max_states) for t in pack.tasks}
    capped = [n for n, r in reports.items() if r.capped]
    unsolved = [n for n, r in reports.items() if not r.solvable_within_bound and not r.capped]
    if capped:
        raise ResourceLimitError(f"search cap hit for: {', '.join(capped)}")
    if unsolved:
        raise ConfigError(f"not solvable within {bound}: {', '.join(unsolved)}")
    order = sorted(pack.tasks, key=lambda t: reports[t.name].min_length)
    return order, reports
