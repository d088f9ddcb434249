"""Selector-driven hill climbing with two-stage selection and error correction."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Sequence

from .actions import GroundedAction, SchemaLedger, bundled_ledger, format_action
from .env import EnvironmentState, RuleSet
from .errors import BackendError, ConfigError
from .grounding import problem_for
from .prompts import Guide, PromptDocument, SelectionContext, SelectionResponse, build_selection_prompt, parse_selection
from .tasks import Status, TaskDefinition, compile_condition

Option = tuple[int, GroundedAction]


@dataclass(frozen=True)
class SearchLimits:
    max_plan_length: int = 20
    max_repeated_queries: int = 10
    partition_size: int = 100

    def __post_init__(self):
        if self.max_plan_length < 1:
            raise ConfigError("max_plan_length must be positive")
        if self.max_repeated_queries < 0:
            raise ConfigError("max_repeated_queries must be non-negative")
        if self.partition_size < 1:
            raise ConfigError("partition_size must be positive")


@dataclass
class EpisodeResult:
    status: Status
    plan: list[GroundedAction]
    transcript: list[dict]
    retries_used: int
    final_state: EnvironmentState
    initial_state: EnvironmentState
    dead_end: bool = False
    episode_id: str = ""
    guide_id: str = ""
    error: str | None = None

    @property
    def success(self) -> bool:
        return self.status is Status.SUCCESS


class QueryLimitReached(Exception):
    def __init__(self, retries: int):
        super().__init__(f"repeat budget exhausted after {retries} repeats")
        self.retries = retries


@dataclass
class EpisodeLog:
    """Collects one transcript record per backend call."""

    episode_id: str = ""
    step: int = 0
    retries_used: int = 0
    records: list[dict] = field(default_factory=list)
    ledger: Any = None

    def call(self, backend, prompt: PromptDocument, partition: int | None = None) -> SelectionResponse:
        raw = backend.complete(prompt)
        if not isinstance(raw, str):
            raise BackendError(f"backend returned {type(raw).__name__}, not text")
        resp = parse_selection(raw)
        rec = {
            "episode_id": self.episode_id,
            "step": self.step,
            "stage": prompt.kind,
            "partition_index": partition,
            "prompt_system": prompt.system_message,
            "prompt_user": prompt.rendered_user,
            "retry": prompt.retry_prefix is not None,
            "raw_response": raw,
            "parsed_index": resp.index,
            "parsed_action": str(resp.action) if resp.parsed else None,
            "correction_kind": None,
            "retries_so_far": self.retries_used,
        }
        self.records.append(rec)
        return resp

    def mark(self, kind: str) -> None:
        self.records[-1]["correction_kind"] = kind


def partition_options(actions: Sequence[GroundedAction], size: int) -> list[list[Option]]:
    if size < 1:
        raise ConfigError("partition size must be positive")
    indexed = list(enumerate(actions))
    return [indexed[i:i + size] for i in range(0, len(indexed), size)]


def _context(task, state, taken, options, full_list, log: EpisodeLog, guide) -> SelectionContext:
    return SelectionContext(task, state, tuple(taken), tuple(options), tuple(full_list), log.step, guide, log.ledger)


def select_candidates(state: EnvironmentState, task: TaskDefinition, guide: Guide | None,
                      taken: Sequence[GroundedAction], partitions: Sequence[Sequence[Option]], backend,
                      budget: int = 0, *, log: EpisodeLog | None = None) -> tuple[list[Option], int]:
    """One query per partition; mismatches expand, nothing is repeated."""
    if not partitions:
        raise ConfigError("select_candidates needs at least one partition")
    log = log if log is not None else EpisodeLog()
    full = [a for part in partitions for _, a in part]
    found: dict[int, GroundedAction] = {}
    for p, part in enumerate(partitions):
        ctx = _context(task, state, taken, part, full, log, guide)
        prompt = build_selection_prompt(task, guide, taken, part, "candidate", context=ctx)
        resp = log.call(backend, prompt, p)
        if resp.parsed is None:
            log.mark("unparseable")
            continue
        i, ref = resp.parsed
        if 0 <= i < len(full) and ref.matches(full[i]):
            found.setdefault(i, full[i])
            continue
        added = [(j, a) for j, a in enumerate(full) if ref.matches(a)]
        if 0 <= i < len(full):
            added.append((i, full[i]))
        log.mark("mismatch-expanded" if added else "unresolved")
        for j, a in added:
            found.setdefault(j, a)
    return sorted(found.items()), 0


def select_final(state: EnvironmentState, task: TaskDefinition, guide: Guide | None,
                 taken: Sequence[GroundedAction], candidates: Sequence[Option], backend,
                 budget: int, *, full_list: Sequence[GroundedAction] = (),
                 log: EpisodeLog | None = None) -> tuple[GroundedAction, int]:
    """Pick one candidate, repeating the query on anything that does not align.

    Raises :class:`QueryLimitReached` when a repeat is needed but ``budget``
    repeats have already been spent.
    """
    if not candidates:
        raise ConfigError("select_final needs at least one candidate")
    log = log if log is not None else EpisodeLog()
    listed = dict(candidates)
    ctx = _context(task, state, taken, candidates, full_list, log, guide)
    used = 0
    previous: SelectionResponse | None = None
    while True:
        prompt = build_selection_prompt(task, guide, taken, candidates, "final", previous, ctx)
        resp = log.call(backend, prompt)
        if resp.parsed is not None:
            i, ref = resp.parsed
            if i in listed and ref.matches(listed[i]):
                return listed[i], used
        if used >= budget:
            log.mark("query-limit")
            raise QueryLimitReached(used)
        log.mark("repeat-unparseable" if resp.parsed is None else "repeat-mismatch")
        used += 1
        log.retries_used += 1
        previous = resp


def run_episode(env: EnvironmentState, task: TaskDefinition, guide: Guide | None, backend,
                ledger: SchemaLedger | None = None, limits: SearchLimits | None = None,
                rules: RuleSet | None = None, episode_id: str = "") -> EpisodeResult:
    ledger = ledger or bundled_ledger()
    limits = limits or SearchLimits()
    guide = guide or Guide.none()
    problem = problem_for(env, ledger, rules)
    goal = compile_condition(task.goal, problem)
    failure = compile_condition(task.failure, problem) if task.failure else None
    kernel = problem.kernel
    bits = problem.encode(env)
    log = EpisodeLog(episode_id, ledger=ledger)
    plan: list[GroundedAction] = []
    dead_end = False
    error = None

    while True:
        if kernel.holds(bits, goal):
            status = Status.SUCCESS
            break
        if failure is not None and kernel.holds(bits, failure):
            status = Status.FAILURE
            break
        if len(plan) >= limits.max_plan_length:
            status = Status.LENGTH_LIMIT
            break
        log.step = len(plan)
        indices = problem.applicable(bits)
        full = [problem.actions[i] for i in indices]
        state = problem.decode(bits)
        try:
            candidates: list[Option] = []
            if full:
                parts = partition_options(full, limits.partition_size)
                candidates, _ = select_candidates(state, task, guide, plan, parts, backend, log=log)
            if not candidates:
                dead_end = True
                status = Status.LENGTH_LIMIT
                log.records.append({"episode_id": episode_id, "step": log.step, "stage": "dead-end",
                                    "applicable": len(full), "retries_so_far": log.retries_used})
                break
            budget = limits.max_repeated_queries - log.retries_used
            action, _ = select_final(state, task, guide, plan, candidates, backend, budget,
                                     full_list=full, log=log)
        except QueryLimitReached:
            status = Status.QUERY_LIMIT
            break
        except BackendError as exc:
            status = Status.BACKEND_ERROR
            error = f"{type(exc).__name__}: {exc}"
            break
        bits = kernel.apply(bits, indices[full.index(action)])
        plan.append(action)

    summary = {
        "episode_id": episode_id,
        "record": "summary",
        "status": status.value,
        "plan": [format_action(a) for a in plan],
        "retries_used": log.retries_used,
        "dead_end": dead_end,
        "guide_id": guide.guide_id,
    }
    if error:
        summary["error"] = error
    log.records.append(summary)
    return EpisodeResult(status, plan, log.records, log.retries_used, problem.decode(bits), env,
                         dead_end, episode_id, guide.guide_id, error)


def replay(env: EnvironmentState, plan: Sequence[GroundedAction], ledger: SchemaLedger | None = None,
           rules: RuleSet | None = None) -> tuple[int | None, EnvironmentState]:
    """Apply ``plan`` from ``env``; returns (first failing step or None, reached state)."""
    problem = problem_for(env, ledger or bundled_ledger(), rules)
    bits = problem.encode(env)
    for k, action in enumerate(plan):
        i = problem.lookup(action)
        if i is None or not problem.kernel.is_applicable(bits, i):
            return k, problem.decode(bits)
        bits = problem.kernel.apply(bits, i)
    return None, problem.decode(bits)


def applicable_in(env: EnvironmentState, ledger: Any = None) -> list[GroundedAction]:
    problem = problem_for(env, ledger or bundled_ledger())
    return [problem.actions[i] for i in problem.applicable(problem.encode(env))]
