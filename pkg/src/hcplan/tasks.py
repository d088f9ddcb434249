"""Tasks, the goal/failure condition language and terminal classification.

Conditions are conjunctions such as ``heated(salmon) & !on(microwave)``.
Arguments are object names; any object with that name can witness an atom.
``name#id`` pins one instance.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from itertools import product
from pathlib import Path
from typing import Any, Iterable, Mapping

from .env import STATE_TOKENS, EnvironmentState, StateMutation, data_path
from .errors import ConditionSyntaxError, DocumentError, EvaluationError
from .kernel import FALSE, CondSpec


class Status(str, Enum):
    ONGOING = "Ongoing"
    SUCCESS = "Success"
    FAILURE = "FailureConditions"
    LENGTH_LIMIT = "LengthLimit"
    QUERY_LIMIT = "QueryLimit"
    BACKEND_ERROR = "BackendError"
    # guide-only replays: stopped on a line that cannot run, or ran out of lines
    INEXECUTABLE = "Inexecutable"
    INCOMPLETE = "Incomplete"

    def __str__(self) -> str:
        return self.value


RELATION_PREDICATES = {
    "inside": ("INSIDE",),
    "on": ("ON_TOP",),
    "on_top": ("ON_TOP",),
    "close": ("CLOSE",),
    "facing": ("FACING",),
    "holds_rh": ("HOLDS_RH",),
    "holds_lh": ("HOLDS_LH",),
    "holds": ("HOLDS_RH", "HOLDS_LH"),
}
TOKEN_PREDICATES = {t.lower(): t for t in STATE_TOKENS}

_ATOM_RE = re.compile(r"^(!?)\s*([a-z_]+)\s*\(([^()]*)\)$")
_ARG_RE = re.compile(r"^([a-z][a-z0-9_]*)(?:#(\d+))?$")


@dataclass(frozen=True)
class ObjectRef:
    name: str
    id: int | None = None

    def __str__(self) -> str:
        return self.name if self.id is None else f"{self.name}#{self.id}"


@dataclass(frozen=True)
class ConditionAtom:
    negated: bool
    predicate: str  # lowercase surface name
    args: tuple[ObjectRef, ...]

    @property
    def kinds(self) -> tuple[str, ...]:
        """Token or relation kinds this atom reads."""
        if len(self.args) == 1:
            return (TOKEN_PREDICATES[self.predicate],)
        return RELATION_PREDICATES[self.predicate]

    def __str__(self) -> str:
        return f"{'!' if self.negated else ''}{self.predicate}({', '.join(map(str, self.args))})"


@dataclass(frozen=True)
class Condition:
    atoms: tuple[ConditionAtom, ...]

    def __post_init__(self):
        if not self.atoms:
            raise ConditionSyntaxError("a condition needs at least one atom")

    def __str__(self) -> str:
        return " & ".join(map(str, self.atoms))


def parse_condition(text: str) -> Condition:
    if not isinstance(text, str) or not text.strip():
        raise ConditionSyntaxError("empty condition")
    atoms = []
    for part in text.split("&"):
        m = _ATOM_RE.match(part.strip())
        if not m:
            raise ConditionSyntaxError(f"bad atom {part.strip()!r}")
        negated, pred, raw_args = bool(m.group(1)), m.group(2), m.group(3)
        args = [a.strip() for a in raw_args.split(",")] if raw_args.strip() else []
        if not args or any(not a for a in args):
            raise ConditionSyntaxError(f"missing argument in {part.strip()!r}")
        refs = []
        for a in args:
            am = _ARG_RE.match(a)
            if not am:
                raise ConditionSyntaxError(f"bad object reference {a!r}")
            refs.append(ObjectRef(am.group(1), int(am.group(2)) if am.group(2) else None))
        if len(refs) == 1:
            if pred not in TOKEN_PREDICATES:
                known = pred in RELATION_PREDICATES
                raise ConditionSyntaxError(
                    f"{pred} takes two arguments" if known else f"unknown predicate {pred!r}")
        elif len(refs) == 2:
            if pred not in RELATION_PREDICATES:
                known = pred in TOKEN_PREDICATES
                raise ConditionSyntaxError(
                    f"{pred} takes one argument" if known else f"unknown predicate {pred!r}")
        else:
            raise ConditionSyntaxError(f"too many arguments in {part.strip()!r}")
        atoms.append(ConditionAtom(negated, pred, tuple(refs)))
    return Condition(tuple(atoms))


def _candidates(ref: ObjectRef, state: EnvironmentState) -> tuple[int, ...]:
    if ref.id is not None:
        node = state.by_id.get(ref.id)
        if node is None or node.name != ref.name:
            raise EvaluationError(f"no object {ref} in the environment")
        return (ref.id,)
    ids = state.ids_by_name.get(ref.name)
    if not ids:
        raise EvaluationError(f"no object named {ref.name!r} in the environment")
    return ids


def atom_instances(atom: ConditionAtom, state: EnvironmentState) -> list[tuple]:
    """Every concrete atom that would witness ``atom``."""
    cands = [_candidates(r, state) for r in atom.args]
    out = []
    for kind in atom.kinds:
        if len(cands) == 1:
            out.extend((kind, i) for i in cands[0])
        else:
            out.extend((s, kind, o) for s, o in product(*cands))
    return out


def evaluate(cond: Condition, state: EnvironmentState) -> bool:
    atoms = state.atoms
    for atom in cond.atoms:
        witnessed = any(a in atoms for a in atom_instances(atom, state))
        if witnessed == atom.negated:
            return False
    return True


def compile_condition(cond: Condition, problem) -> CondSpec:
    """Lower a condition onto a compiled problem's bit layout."""
    pos = neg = 0
    clauses = []
    for atom in cond.atoms:
        mask = 0
        static = False
        for inst in atom_instances(atom, problem.template):
            args = (inst[1],) if len(inst) == 2 else (inst[0], inst[2])
            m, s = problem.matching(inst[0] if len(inst) == 2 else inst[1], args)
            mask |= m
            static = static or s
        if atom.negated:
            if static:
                return FALSE
            neg |= mask
        elif not static:
            if not mask:
                return FALSE
            if mask & (mask - 1) == 0:
                pos |= mask
            else:
                clauses.append(((mask, True),))
    if pos & neg:
        return FALSE
    return CondSpec(pos, neg, tuple(clauses))


# ---------------------------------------------------------------------------
# Tasks


@dataclass(frozen=True)
class TaskDefinition:
    name: str
    description: str
    goal: Condition
    failure: Condition | None = None
    hint_suffix: str | None = None

    def __post_init__(self):
        if not self.description.strip():
            raise DocumentError(f"task {self.name} has an empty description")

    @property
    def prompt_description(self) -> str:
        """Description shown to the selector, hint included."""
        if not self.hint_suffix:
            return self.description
        return f"{self.description}. {self.hint_suffix}"

    def with_hint(self, suffix: str | None) -> "TaskDefinition":
        return TaskDefinition(self.name, self.description, self.goal, self.failure, suffix)


def classify(state: EnvironmentState, task: TaskDefinition) -> Status:
    if evaluate(task.goal, state):
        return Status.SUCCESS
    if task.failure is not None and evaluate(task.failure, state):
        return Status.FAILURE
    return Status.ONGOING


@dataclass(frozen=True)
class TaskVariant:
    name: str
    suffix: str | None = None
    mutations: tuple[StateMutation, ...] = ()
    excluded_verbs: tuple[str, ...] = ()
    description: str = ""


@dataclass(frozen=True)
class TaskPack:
    tasks: tuple[TaskDefinition, ...]
    variants: Mapping[str, tuple[TaskVariant, ...]] = field(default_factory=dict)
    presets: Mapping[str, tuple[StateMutation, ...]] = field(default_factory=dict)

    def __getitem__(self, name: str) -> TaskDefinition:
        for t in self.tasks:
            if t.name == name:
                return t
        raise KeyError(name)

    def names(self) -> list[str]:
        return [t.name for t in self.tasks]

    def variant(self, task: str, name: str) -> TaskVariant:
        for v in self.variants.get(task, ()):
            if v.name == name:
                return v
        raise KeyError(f"task {task} has no variant {name!r}")

    def preset(self, name: str) -> tuple[StateMutation, ...]:
        try:
            return self.presets[name]
        except KeyError:
            raise KeyError(f"unknown preset {name!r}") from None

    def select(self, names: Iterable[str] | None) -> "TaskPack":
        if names is None:
            return self
        chosen = tuple(self[n] for n in names)
        return TaskPack(chosen, self.variants, self.presets)


def _mutations(raw: Iterable[Mapping]) -> tuple[StateMutation, ...]:
    return tuple(StateMutation.from_dict(m) for m in raw)


def load_task_pack(source: Any = None) -> TaskPack:
    if source is None:
        source = data_path("tasks.json")
    if isinstance(source, Mapping):
        data = source
    else:
        try:
            data = json.loads(Path(source).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise DocumentError(f"cannot read task pack {source}: {exc}") from exc
    tasks = []
    variants: dict[str, tuple[TaskVariant, ...]] = {}
    for raw in data["tasks"]:
        try:
            task = TaskDefinition(
                name=raw["name"],
                description=raw["description"],
                goal=parse_condition(raw["goal"]),
                failure=parse_condition(raw["failure"]) if raw.get("failure") else None,
            )
        except KeyError as exc:
            raise DocumentError(f"task record is missing {exc}") from None
        tasks.append(task)
        variants[task.name] = tuple(
            TaskVariant(
                name=v["name"],
                suffix=v.get("suffix"),
                mutations=_mutations(v.get("mutations", ())),
                excluded_verbs=tuple(x.upper() for x in v.get("excluded_verbs", ())),
                description=v.get("doc", ""),
            )
            for v in raw.get("variants", ())
        )
    if len({t.name for t in tasks}) != len(tasks):
        raise DocumentError("task names must be unique")
    presets = {k: _mutations(v) for k, v in data.get("presets", {}).items()}
    return TaskPack(tuple(tasks), variants, presets)


_BUNDLED: TaskPack | None = None


def bundled_tasks() -> TaskPack:
    global _BUNDLED
    if _BUNDLED is None:
        _BUNDLED = load_task_pack()
    return _BUNDLED
