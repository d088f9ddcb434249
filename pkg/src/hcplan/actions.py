"""Action language, schema ledger, applicability and transitions.

Grounded actions print as ``[VERB]<name>(id)<name>(id)``; the prompt-facing
form drops the ids. Guides use the looser ``verb | name | name`` lines.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping

from . import patterns
from .errors import ActionSyntaxError, ArityError, DocumentError, GuideParseError, UnknownVerbError

# Verb inventory in the order used for grounding and for prompt listings.
VERB_ARITY: dict[str, int] = {
    "WALK": 1, "CLOSE": 1, "CUT": 1, "DRINK": 1, "DROP": 1, "EAT": 1, "GRAB": 1,
    "GREET": 1, "LIE": 1, "MOVE": 1, "OPEN": 1, "PLUGIN": 1, "PLUGOUT": 1,
    "POUR": 2, "PLACEON": 2, "PUTIN": 2, "PUTON": 1, "READ": 1, "SIT": 1,
    "SLEEP": 0, "STANDUP": 0, "SWITCHOFF": 1, "SWITCHON": 1, "TAKEOFF": 1,
    "TOUCH": 1, "TYPE": 1, "USE": 1, "WAKEUP": 0, "WASH": 1, "WATCH": 1, "WIPE": 2,
}
VERB_RANK = {v: i for i, v in enumerate(VERB_ARITY)}

_ACTION_RE = re.compile(r"^\[([A-Za-z]+)\]((?:<[^<>()]+>\(\d+\))*)$")
_ARG_RE = re.compile(r"<([^<>()]+)>\((\d+)\)")
_INDEX_PREFIX_RE = re.compile(r"^\s*\d+\s*[.)]\s*")


@dataclass(frozen=True, order=True)
class GroundedAction:
    verb: str
    args: tuple[tuple[str, int], ...] = ()

    @property
    def ids(self) -> tuple[int, ...]:
        return tuple(i for _, i in self.args)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.args)

    def ref(self) -> "ActionRef":
        return ActionRef(self.verb, self.names)

    def __str__(self) -> str:
        return format_action(self, with_ids=True)


@dataclass(frozen=True)
class ActionRef:
    """An action without ids, as written in prompts and guides."""

    verb: str
    arg_names: tuple[str, ...] = ()

    def matches(self, action: GroundedAction) -> bool:
        return self.verb == action.verb and self.arg_names == action.names

    def __str__(self) -> str:
        return f"[{self.verb}]" + "".join(f"<{n}>" for n in self.arg_names)


def _check_verb(verb: str, n_args: int, text: str, exc=ArityError) -> str:
    if verb not in VERB_ARITY:
        raise UnknownVerbError(f"unknown verb {verb!r} in {text!r}")
    if VERB_ARITY[verb] != n_args:
        raise exc(f"{verb} takes {VERB_ARITY[verb]} argument(s), got {n_args} in {text!r}")
    return verb


def parse_action(text: str) -> GroundedAction:
    src = text.strip()
    m = _ACTION_RE.match(src)
    if not m:
        raise ActionSyntaxError(f"not an action: {text!r}")
    verb = m.group(1).upper()
    args = tuple((name.strip(), int(i)) for name, i in _ARG_RE.findall(m.group(2)))
    _check_verb(verb, len(args), text)
    return GroundedAction(verb, args)


def format_action(action: GroundedAction, with_ids: bool = True) -> str:
    if with_ids:
        return f"[{action.verb}]" + "".join(f"<{n}>({i})" for n, i in action.args)
    return f"[{action.verb}]" + "".join(f"<{n}>" for n, _ in action.args)


def parse_guide_line(text: str) -> ActionRef:
    """Parse ``[N.] verb | name [| name]`` into an :class:`ActionRef`."""
    src = _INDEX_PREFIX_RE.sub("", text.strip(), count=1).strip()
    if not src:
        raise GuideParseError("empty guide line")
    parts = [p.strip() for p in src.split("|")]
    if any(not p for p in parts):
        raise GuideParseError(f"empty segment in guide line {text!r}")
    verb = parts[0].upper().replace(" ", "")
    try:
        _check_verb(verb, len(parts) - 1, text, exc=GuideParseError)
    except UnknownVerbError as exc:
        raise GuideParseError(str(exc)) from None
    return ActionRef(verb, tuple(p.lower() for p in parts[1:]))


# ---------------------------------------------------------------------------
# Schema ledger


@dataclass(frozen=True)
class ActionSchema:
    verb: str
    params: tuple[str, ...]
    where: tuple[patterns.StaticTest, ...]
    preconditions: tuple[patterns.Clause | patterns.Quantified, ...]
    add: tuple[patterns.Literal, ...]
    delete: tuple[patterns.Literal, ...]
    conditional: tuple[patterns.Effect, ...]
    doc: str = ""
    source: Mapping = field(default_factory=dict, compare=False, repr=False)

    @property
    def arity(self) -> int:
        return len(self.params)

    @classmethod
    def from_dict(cls, raw: Mapping) -> "ActionSchema":
        verb = raw["verb"]
        params = tuple(raw.get("params", ()))
        if verb not in VERB_ARITY:
            raise DocumentError(f"ledger verb {verb!r} is not in the inventory")
        if len(params) != VERB_ARITY[verb] or raw.get("arity", len(params)) != len(params):
            raise DocumentError(f"ledger entry {verb} has the wrong arity")
        schema = cls(
            verb=verb,
            params=params,
            where=tuple(patterns.parse_test(t) for t in raw.get("where", ())),
            preconditions=tuple(patterns.parse_precondition(p) for p in raw.get("preconditions", ())),
            add=tuple(patterns.parse_literal(a) for a in raw.get("add", ())),
            delete=tuple(patterns.parse_literal(d) for d in raw.get("delete", ())),
            conditional=tuple(patterns.parse_effect(e) for e in raw.get("conditional", ())),
            doc=raw.get("doc", ""),
            source=raw,
        )
        schema._check_variables()
        return schema

    def _check_variables(self) -> None:
        known = set(self.params)
        lits = list(self.add) + list(self.delete)
        for eff in self.conditional:
            scope = known | ({eff.var} if eff.var else set())
            for lit in list(eff.add) + list(eff.delete) + [x for c in eff.condition for x in c.literals]:
                if patterns.pattern_variables(lit) - scope:
                    raise DocumentError(f"{self.verb}: effect {lit} uses an unbound variable")
        for lit in lits:
            if patterns.pattern_variables(lit) - known:
                raise DocumentError(f"{self.verb}: effect {lit} uses an unbound variable")

    def bindings(self, scope: patterns.Scope) -> list[dict[str, int]]:
        """Parameter bindings passing the static filters, ascending by id."""
        out: list[dict[str, int]] = [{}]
        for var in self.params:
            out = [{**b, var: oid} for b in out for oid in patterns.domain(scope, self.where, var, b)]
        return [b for b in out if patterns.guard_holds(self.where, b, scope)]


@dataclass(frozen=True)
class SchemaLedger:
    schemas: tuple[ActionSchema, ...]
    excluded: frozenset[str] = frozenset()

    def __post_init__(self):
        unknown = set(self.excluded) - {s.verb for s in self.schemas}
        if unknown:
            raise DocumentError(f"cannot exclude unknown verb(s): {sorted(unknown)}")

    @property
    def verbs(self) -> tuple[str, ...]:
        return tuple(s.verb for s in self.schemas if s.verb not in self.excluded)

    def active(self) -> tuple[ActionSchema, ...]:
        return tuple(s for s in self.schemas if s.verb not in self.excluded)

    def __getitem__(self, verb: str) -> ActionSchema:
        for s in self.schemas:
            if s.verb == verb and verb not in self.excluded:
                return s
        raise KeyError(verb)

    def __contains__(self, verb: str) -> bool:
        return verb in self.verbs

    def without(self, verbs: Iterable[str]) -> "SchemaLedger":
        return SchemaLedger(self.schemas, self.excluded | {v.upper() for v in verbs})

    @property
    def key(self) -> str:
        body = json.dumps([s.source for s in self.schemas], sort_keys=True)
        digest = hashlib.sha1(body.encode()).hexdigest()[:16]
        return f"{digest}:{','.join(sorted(self.excluded))}"


def load_ledger(source: Any = None, exclude: Iterable[str] = ()) -> SchemaLedger:
    """Load a ledger file (the bundled one when ``source`` is None)."""
    if source is None:
        from .env import data_path

        source = data_path("ledger.json")
    if isinstance(source, Mapping):
        data = source
    else:
        try:
            data = json.loads(Path(source).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise DocumentError(f"cannot read ledger {source}: {exc}") from exc
    schemas = tuple(ActionSchema.from_dict(raw) for raw in data["schemas"])
    schemas = tuple(sorted(schemas, key=lambda s: VERB_RANK[s.verb]))
    if len({s.verb for s in schemas}) != len(schemas):
        raise DocumentError("ledger lists a verb twice")
    return SchemaLedger(schemas, frozenset(v.upper() for v in exclude))


_BUNDLED: SchemaLedger | None = None


def bundled_ledger(exclude: Iterable[str] = ()) -> SchemaLedger:
    global _BUNDLED
    if _BUNDLED is None:
        _BUNDLED = load_ledger()
    exclude = tuple(exclude)
    return _BUNDLED.without(exclude) if exclude else _BUNDLED


# ---------------------------------------------------------------------------
# f_a and f_t (delegating to the compiled problem)


def applicable_actions(state, ledger: SchemaLedger | None = None) -> list[GroundedAction]:
    from .grounding import problem_for

    problem = problem_for(state, ledger)
    return [problem.actions[i] for i in problem.applicable(problem.encode(state))]


def apply(state, action: GroundedAction, ledger: SchemaLedger | None = None):
    from .grounding import problem_for

    problem = problem_for(state, ledger)
    return problem.decode(problem.apply_checked(problem.encode(state), action, state))
