"""Atom-pattern grammar used by the schema ledger and the derived-rule file.

A *literal* is ``[!]PRED(arg[, arg])``. One-argument predicates name a
dynamic state token (``OPEN(x)``); two-argument predicates name a relation
kind (``CLOSE(agent, x)``). Arguments are parameter names, the constant
``agent``, the wildcard ``*`` or ``@room(v)`` (the room holding ``v``).

A *clause* is a disjunction ``lit | lit | ...`` optionally followed by
``if <guard>``, where the guard is a ``&``-conjunction of static tests
evaluated once at grounding time:

    PROP(x)  !PROP(x)  x != y  x == y  name(x) == tok  name(x) != tok
    paired(f, s)

The functions at the bottom evaluate literals directly against an atom set;
they form the reference interpreter that the compiled kernel is checked
against.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Mapping

from .errors import LedgerError

WILD = "*"
AGENT = "agent"

_ROOM_RE = re.compile(r"@room\(\s*(\w+)\s*\)")
_LITERAL_RE = re.compile(r"^(!?)\s*([A-Z][A-Z_]*)\s*\(([^()]*)\)$")
_NAME_TEST_RE = re.compile(r"^name\(\s*(\w+)\s*\)\s*(==|!=)\s*(\w+)$")
_VAR_TEST_RE = re.compile(r"^(\w+)\s*(==|!=)\s*(\w+)$")
_PAIRED_RE = re.compile(r"^paired\(\s*(\w+)\s*,\s*(\w+)\s*\)$")


@dataclass(frozen=True)
class Literal:
    negated: bool
    predicate: str
    args: tuple[str, ...]

    @property
    def is_relation(self) -> bool:
        return len(self.args) == 2

    def __str__(self) -> str:
        args = ", ".join(f"@room({a[6:]})" if a.startswith("@room:") else a for a in self.args)
        return f"{'!' if self.negated else ''}{self.predicate}({args})"


@dataclass(frozen=True)
class StaticTest:
    op: str  # prop | eq | neq | name_eq | name_neq | paired
    args: tuple[str, ...]
    negated: bool = False


@dataclass(frozen=True)
class Clause:
    literals: tuple[Literal, ...]
    guard: tuple[StaticTest, ...] = ()

    def __str__(self) -> str:
        return " | ".join(str(lit) for lit in self.literals)


@dataclass(frozen=True)
class Quantified:
    """``forall v where ...: clause`` or ``exists v where ...: lit & lit``."""

    kind: str
    var: str
    where: tuple[StaticTest, ...]
    body: tuple[Literal, ...]
    guard: tuple[StaticTest, ...] = ()


@dataclass(frozen=True)
class Effect:
    """A conditional effect, optionally universally quantified over ``var``."""

    condition: tuple[Clause, ...]
    add: tuple[Literal, ...]
    delete: tuple[Literal, ...]
    var: str | None = None
    where: tuple[StaticTest, ...] = ()


def _split_args(raw: str) -> tuple[str, ...]:
    parts = tuple(p.strip() for p in raw.split(",")) if raw.strip() else ()
    if any(not p for p in parts):
        raise LedgerError(f"empty argument in {raw!r}")
    return parts


def parse_literal(text: str) -> Literal:
    src = _ROOM_RE.sub(lambda m: f"@room:{m.group(1)}", text.strip())
    m = _LITERAL_RE.match(src)
    if not m:
        raise LedgerError(f"bad literal {text!r}")
    args = _split_args(m.group(3))
    if len(args) not in (1, 2):
        raise LedgerError(f"literal {text!r} must have one or two arguments")
    return Literal(bool(m.group(1)), m.group(2), args)


def parse_test(text: str) -> StaticTest:
    src = text.strip()
    if m := _NAME_TEST_RE.match(src):
        return StaticTest("name_eq" if m.group(2) == "==" else "name_neq", (m.group(1), m.group(3)))
    if m := _PAIRED_RE.match(src):
        return StaticTest("paired", (m.group(1), m.group(2)))
    if m := _VAR_TEST_RE.match(src):
        return StaticTest("eq" if m.group(2) == "==" else "neq", (m.group(1), m.group(3)))
    m = _LITERAL_RE.match(src)
    if m and len(_split_args(m.group(3))) == 1:
        return StaticTest("prop", (m.group(2), m.group(3).strip()), negated=bool(m.group(1)))
    raise LedgerError(f"bad static test {text!r}")


def parse_guard(text: str) -> tuple[StaticTest, ...]:
    return tuple(parse_test(part) for part in text.split("&") if part.strip())


def parse_clause(text: str) -> Clause:
    body, _, guard = text.partition(" if ")
    literals = tuple(parse_literal(part) for part in body.split("|"))
    return Clause(literals, parse_guard(guard) if guard else ())


def parse_precondition(entry) -> Clause | Quantified:
    if isinstance(entry, str):
        return parse_clause(entry)
    if not isinstance(entry, Mapping):
        raise LedgerError(f"bad precondition entry {entry!r}")
    where = tuple(parse_test(t) for t in entry.get("where", ()))
    guard = parse_guard(entry["if"]) if entry.get("if") else ()
    if "forall" in entry:
        clause = parse_clause(entry["require"])
        if clause.guard:
            raise LedgerError("guards belong on the quantifier, not inside it")
        return Quantified("forall", entry["forall"], where, clause.literals, guard)
    if "exists" in entry:
        body = tuple(parse_literal(t) for t in entry["all"])
        return Quantified("exists", entry["exists"], where, body, guard)
    raise LedgerError(f"precondition object needs 'forall' or 'exists': {entry!r}")


def parse_effect(entry: Mapping) -> Effect:
    return Effect(
        condition=tuple(parse_clause(c) for c in entry.get("if", ())),
        add=tuple(parse_literal(a) for a in entry.get("add", ())),
        delete=tuple(parse_literal(d) for d in entry.get("delete", ())),
        var=entry.get("forall"),
        where=tuple(parse_test(t) for t in entry.get("where", ())),
    )


def pattern_variables(lit: Literal) -> set[str]:
    out = set()
    for a in lit.args:
        if a.startswith("@room:"):
            out.add(a[6:])
        elif a not in (WILD, AGENT):
            out.add(a)
    return out


# ---------------------------------------------------------------------------
# Evaluation against a concrete world


class Scope:
    """Read-only view of a state used for pattern evaluation.

    ``atoms`` holds token atoms ``(TOKEN, id)`` and relation triples
    ``(subject, KIND, object)``.
    """

    def __init__(self, objects: Mapping, atoms: Iterable, agent_id: int, pairings=frozenset()):
        self.objects = objects
        self.atoms = atoms if isinstance(atoms, (set, frozenset)) else set(atoms)
        self.agent_id = agent_id
        self.pairings = pairings
        self._by_subject: dict | None = None
        self._by_object: dict | None = None
        self._rooms: dict[int, int | None] = {}

    def _index(self) -> None:
        by_s: dict = {}
        by_o: dict = {}
        for atom in self.atoms:
            if len(atom) == 3:
                s, k, o = atom
                by_s.setdefault((k, s), set()).add(o)
                by_o.setdefault((k, o), set()).add(s)
        self._by_subject, self._by_object = by_s, by_o

    def related(self, kind: str, subject: int | None, obj: int | None) -> bool:
        if subject is not None and obj is not None:
            return (subject, kind, obj) in self.atoms
        if self._by_subject is None:
            self._index()
        if subject is not None:
            return bool(self._by_subject.get((kind, subject)))
        if obj is not None:
            return bool(self._by_object.get((kind, obj)))
        return any(len(a) == 3 and a[1] == kind for a in self.atoms)

    def matching(self, kind: str, subject: int | None, obj: int | None) -> list:
        if self._by_subject is None:
            self._index()
        if subject is not None and obj is not None:
            atom = (subject, kind, obj)
            return [atom] if atom in self.atoms else []
        if subject is not None:
            return [(subject, kind, o) for o in self._by_subject.get((kind, subject), ())]
        if obj is not None:
            return [(s, kind, obj) for s in self._by_object.get((kind, obj), ())]
        return [a for a in self.atoms if len(a) == 3 and a[1] == kind]

    def room_of(self, oid: int) -> int | None:
        """Room holding a non-movable object; rooms map to themselves."""
        if oid in self._rooms:
            return self._rooms[oid]
        node = self.objects[oid]
        room = None
        if "ROOM" in node.static_properties:
            room = oid
        elif "GRABBABLE" not in node.static_properties:
            if self._by_subject is None:
                self._index()
            rooms = [r for r in self._by_subject.get(("INSIDE", oid), ()) if "ROOM" in self.objects[r].static_properties]
            room = min(rooms) if rooms else None
        self._rooms[oid] = room
        return room


def resolve_arg(arg: str, binding: Mapping[str, int], scope: Scope):
    """Return an object id, ``WILD``, or ``None`` when ``@room`` is undefined."""
    if arg == WILD:
        return WILD
    if arg == AGENT:
        return scope.agent_id
    if arg.startswith("@room:"):
        return scope.room_of(binding[arg[6:]])
    try:
        return binding[arg]
    except KeyError:
        raise LedgerError(f"unbound variable {arg!r}") from None


def static_test(test: StaticTest, binding: Mapping[str, int], scope: Scope) -> bool:
    def oid(a: str) -> int:
        return scope.agent_id if a == AGENT else binding[a]

    if test.op == "prop":
        prop, var = test.args
        result = prop in scope.objects[oid(var)].static_properties
        return not result if test.negated else result
    if test.op == "eq":
        return oid(test.args[0]) == oid(test.args[1])
    if test.op == "neq":
        return oid(test.args[0]) != oid(test.args[1])
    if test.op == "name_eq":
        return scope.objects[oid(test.args[0])].name == test.args[1]
    if test.op == "name_neq":
        return scope.objects[oid(test.args[0])].name != test.args[1]
    if test.op == "paired":
        return (oid(test.args[0]), oid(test.args[1])) in scope.pairings
    raise LedgerError(f"unknown static test {test.op}")


def guard_holds(guard: Iterable[StaticTest], binding, scope: Scope) -> bool:
    return all(static_test(t, binding, scope) for t in guard)


def literal_holds(lit: Literal, binding: Mapping[str, int], scope: Scope) -> bool:
    """Truth of a literal on the scope's atoms (wildcards read as 'some')."""
    args = [resolve_arg(a, binding, scope) for a in lit.args]
    if any(a is None for a in args):
        present = False
    elif lit.is_relation:
        s, o = args
        present = scope.related(lit.predicate, None if s == WILD else s, None if o == WILD else o)
    else:
        (o,) = args
        if o == WILD:
            present = any(len(a) == 2 and a[0] == lit.predicate for a in scope.atoms)
        else:
            present = (lit.predicate, o) in scope.atoms
    return present != lit.negated


def literal_atoms(lit: Literal, binding: Mapping[str, int], scope: Scope) -> list:
    """Concrete atoms denoted by a (possibly wildcarded) literal.

    Wildcards expand only against atoms present in ``scope``; this is the
    semantics of a wildcard delete.
    """
    args = [resolve_arg(a, binding, scope) for a in lit.args]
    if any(a is None for a in args):
        return []
    if lit.is_relation:
        s, o = args
        if WILD not in (s, o):
            return [(s, lit.predicate, o)]
        return scope.matching(lit.predicate, None if s == WILD else s, None if o == WILD else o)
    (o,) = args
    if o == WILD:
        return [a for a in scope.atoms if len(a) == 2 and a[0] == lit.predicate]
    return [(lit.predicate, o)]


def domain(scope: Scope, where: Iterable[StaticTest], var: str, binding: Mapping[str, int]) -> list[int]:
    """Objects (agent excluded) that satisfy every test mentioning only bound vars."""
    out = []
    for oid in sorted(scope.objects):
        if oid == scope.agent_id:
            continue
        trial = {**binding, var: oid}
        if all(static_test(t, trial, scope) for t in where if _bound(t, trial)):
            out.append(oid)
    return out


def _bound(test: StaticTest, binding: Mapping[str, int]) -> bool:
    names = test.args[1:] if test.op == "prop" else test.args[:1] if test.op.startswith("name") else test.args
    return all(n == AGENT or n in binding for n in names)
