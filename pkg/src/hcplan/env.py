"""Symbolic household world: objects, relations, derived rules, mutations."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from itertools import product
from pathlib import Path
from typing import Any, Iterable, Mapping, NamedTuple

from . import patterns
from .errors import DocumentError, MutationError

RELATION_KINDS = ("INSIDE", "ON_TOP", "CLOSE", "HOLDS_RH", "HOLDS_LH", "FACING")

# Canonical order for dynamic state tokens; unknown tokens sort after these.
STATE_TOKENS = (
    "ON", "OFF", "OPEN", "CLOSED", "PLUGGED_IN", "PLUGGED_OUT",
    "SITTING", "LYING", "SLEEPING",
    "HEATED", "FILLED", "CLEAN", "DIRTY", "CUT", "EATEN", "USED", "WORN",
)
COMPLEMENT = {
    "ON": "OFF", "OFF": "ON",
    "OPEN": "CLOSED", "CLOSED": "OPEN",
    "PLUGGED_IN": "PLUGGED_OUT", "PLUGGED_OUT": "PLUGGED_IN",
}
# A token may only appear on objects carrying the matching static property.
TOKEN_REQUIRES = {
    "ON": "HAS_SWITCH", "OFF": "HAS_SWITCH",
    "OPEN": "CAN_OPEN", "CLOSED": "CAN_OPEN",
    "PLUGGED_IN": "HAS_PLUG", "PLUGGED_OUT": "HAS_PLUG",
}
AGENT_NAME = "character"
_TOKEN_RANK = {t: i for i, t in enumerate(STATE_TOKENS)}
_NAME_RE = re.compile(r"^[a-z][a-z0-9_]*$")
_TOKEN_RE = re.compile(r"^[A-Z][A-Z0-9_]*$")


def token_order(tokens: Iterable[str]) -> tuple[str, ...]:
    return tuple(sorted(set(tokens), key=lambda t: (_TOKEN_RANK.get(t, len(_TOKEN_RANK)), t)))


class Relation(NamedTuple):
    subject_id: int
    kind: str
    object_id: int


@dataclass(frozen=True)
class ObjectNode:
    id: int
    name: str
    static_properties: tuple[str, ...] = ()
    dynamic_states: tuple[str, ...] = ()

    def has(self, prop: str) -> bool:
        return prop in self.static_properties


@dataclass(frozen=True)
class EnvironmentState:
    """Immutable world snapshot.

    ``objects`` is sorted by id. ``pairings`` holds (faucet, sink) id pairs
    fixed when the document was loaded.
    """

    objects: tuple[ObjectNode, ...]
    relations: frozenset[Relation]
    agent_id: int
    pairings: frozenset[tuple[int, int]] = frozenset()

    @cached_property
    def by_id(self) -> dict[int, ObjectNode]:
        return {o.id: o for o in self.objects}

    @cached_property
    def ids_by_name(self) -> dict[str, tuple[int, ...]]:
        out: dict[str, list[int]] = {}
        for o in self.objects:
            out.setdefault(o.name, []).append(o.id)
        return {k: tuple(v) for k, v in out.items()}

    @property
    def agent(self) -> ObjectNode:
        return self.by_id[self.agent_id]

    @cached_property
    def movable_ids(self) -> frozenset[int]:
        return frozenset(o.id for o in self.objects if o.has("GRABBABLE"))

    def is_fluent_relation(self, rel: tuple) -> bool:
        """Relations an action may ever add or delete.

        Anything about the agent, plus INSIDE/ON_TOP of movable objects.
        Everything else in the graph is fixed scenery.
        """
        s, kind, _ = rel
        return s == self.agent_id or (s in self.movable_ids and kind in ("INSIDE", "ON_TOP"))

    @cached_property
    def static_key(self) -> tuple:
        nodes = tuple((o.id, o.name, o.static_properties) for o in self.objects)
        fixed = frozenset(r for r in self.relations if not self.is_fluent_relation(r))
        return (nodes, fixed, self.agent_id, self.pairings)

    @cached_property
    def atoms(self) -> frozenset:
        """Every true atom: ``(TOKEN, id)`` pairs and relation triples."""
        tokens = [(t, o.id) for o in self.objects for t in o.dynamic_states]
        return frozenset(tokens).union(self.relations)

    def scope(self) -> patterns.Scope:
        return patterns.Scope(self.by_id, self.atoms, self.agent_id, self.pairings)

    def with_atoms(self, atoms: Iterable) -> "EnvironmentState":
        """Rebuild a state of the same world from an atom set."""
        tokens: dict[int, list[str]] = {}
        rels = []
        for a in atoms:
            if len(a) == 2:
                tokens.setdefault(a[1], []).append(a[0])
            else:
                rels.append(Relation(*a))
        objects = tuple(
            o if tuple(o.dynamic_states) == token_order(tokens.get(o.id, ())) else
            ObjectNode(o.id, o.name, o.static_properties, token_order(tokens.get(o.id, ())))
            for o in self.objects
        )
        return EnvironmentState(objects, frozenset(rels), self.agent_id, self.pairings)

    def describe(self) -> dict[str, int]:
        return {"objects": len(self.objects), "relations": len(self.relations)}


# ---------------------------------------------------------------------------
# Loading


def _read_document(document: Any) -> Mapping:
    if isinstance(document, Mapping):
        return document
    if isinstance(document, Path) or (isinstance(document, str) and not document.lstrip().startswith("{")):
        path = Path(document)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise DocumentError(f"cannot read environment {path}: {exc}") from exc
    else:
        text = document
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"environment is not valid JSON: {exc}") from exc
    if not isinstance(data, Mapping):
        raise DocumentError("environment document must be a JSON object")
    return data


def _str_list(value: Any, what: str) -> list[str]:
    if not isinstance(value, list) or not all(isinstance(v, str) and _TOKEN_RE.match(v) for v in value):
        raise DocumentError(f"{what} must be a list of UPPERCASE tokens, got {value!r}")
    return value


def check_object_tokens(node: ObjectNode) -> None:
    states = set(node.dynamic_states)
    for a, b in (("ON", "OFF"), ("OPEN", "CLOSED"), ("PLUGGED_IN", "PLUGGED_OUT")):
        if a in states and b in states:
            raise DocumentError(f"object {node.name}({node.id}) is both {a} and {b}")
    for tok in states:
        need = TOKEN_REQUIRES.get(tok)
        if need and need not in node.static_properties:
            raise DocumentError(f"object {node.name}({node.id}) is {tok} but lacks {need}")


def compute_pairings(objects: Mapping[int, ObjectNode], relations: Iterable[Relation]) -> frozenset[tuple[int, int]]:
    """Pair faucets with the sinks they are co-located with.

    Co-location: a CLOSE edge in either direction, one placed in/on the
    other, or both placed in/on the same non-room object.
    """
    faucets = {i for i, o in objects.items() if o.name == "faucet"}
    sinks = {i for i, o in objects.items() if o.name == "sink"}
    if not faucets or not sinks:
        return frozenset()
    holders: dict[int, set[int]] = {}
    pairs = set()
    for s, kind, o in relations:
        if kind == "CLOSE" and {s, o} & faucets and {s, o} & sinks:
            f, k = (s, o) if s in faucets else (o, s)
            if f in faucets and k in sinks:
                pairs.add((f, k))
        elif kind in ("INSIDE", "ON_TOP"):
            if s in faucets and o in sinks:
                pairs.add((s, o))
            elif s in sinks and o in faucets:
                pairs.add((o, s))
            elif "ROOM" not in objects[o].static_properties:
                holders.setdefault(o, set()).add(s)
    for members in holders.values():
        for f, k in product(members & faucets, members & sinks):
            pairs.add((f, k))
    return frozenset(pairs)


def load_environment(document: Any, rules: "RuleSet | None" = None) -> EnvironmentState:
    """Build a state from a JSON graph document (mapping, JSON text or path).

    Derived rules (the bundled set unless ``rules`` is given) are run to
    fixpoint before returning.
    """
    data = _read_document(document)
    nodes, edges = data.get("nodes"), data.get("edges")
    if not isinstance(nodes, list) or not isinstance(edges, list):
        raise DocumentError("document needs 'nodes' and 'edges' lists")
    objects: dict[int, ObjectNode] = {}
    for raw in nodes:
        if not isinstance(raw, Mapping):
            raise DocumentError(f"node must be an object: {raw!r}")
        oid, name = raw.get("id"), raw.get("name")
        if not isinstance(oid, int) or isinstance(oid, bool) or oid <= 0:
            raise DocumentError(f"node id must be a positive integer: {raw!r}")
        if not isinstance(name, str) or not _NAME_RE.match(name):
            raise DocumentError(f"node name must be a lowercase token: {raw!r}")
        if oid in objects:
            raise DocumentError(f"duplicate node id {oid}")
        props = _str_list(raw.get("properties", []), f"properties of node {oid}")
        states = _str_list(raw.get("states", []), f"states of node {oid}")
        node = ObjectNode(oid, name, tuple(dict.fromkeys(props)), token_order(states))
        check_object_tokens(node)
        objects[oid] = node
    agents = [o.id for o in objects.values() if o.name == AGENT_NAME]
    if len(agents) != 1:
        raise DocumentError(f"expected exactly one '{AGENT_NAME}' node, found {len(agents)}")
    relations = set()
    for raw in edges:
        if not isinstance(raw, Mapping):
            raise DocumentError(f"edge must be an object: {raw!r}")
        s, kind, o = raw.get("from"), raw.get("kind"), raw.get("to")
        if kind not in RELATION_KINDS:
            raise DocumentError(f"unknown relation kind {kind!r}")
        for end in (s, o):
            if end not in objects:
                raise DocumentError(f"edge {s} {kind} {o} references missing node {end}")
        relations.add(Relation(s, kind, o))
    agent = agents[0]
    for hand in ("HOLDS_RH", "HOLDS_LH"):
        if sum(1 for r in relations if r.kind == hand and r.subject_id == agent) > 1:
            raise DocumentError(f"agent has more than one {hand} relation")
    state = EnvironmentState(
        tuple(objects[i] for i in sorted(objects)),
        frozenset(relations),
        agent,
        compute_pairings(objects, relations),
    )
    return apply_derived_rules(state, rules if rules is not None else bundled_rules())


def load_listing(text: str) -> tuple[ObjectNode, ...]:
    """Parse the ``name: properties - {..} | states - {..}`` listing.

    Ids are assigned in line order starting at 1; the listing carries no edges.
    """
    out = []
    line_re = re.compile(r"^(\w+)(?::\s*properties - \{([^}]*)\}(?:\s*\|\s*states - \{([^}]*)\})?)?$")
    for n, line in enumerate((ln for ln in text.splitlines() if ln.strip()), start=1):
        m = line_re.match(line.strip())
        if not m:
            raise DocumentError(f"bad listing line {line!r}")

        def split(block):
            return tuple(t.strip() for t in block.split(",") if t.strip()) if block else ()

        out.append(ObjectNode(n, m.group(1), split(m.group(2)), split(m.group(3))))
    return tuple(out)


# ---------------------------------------------------------------------------
# Derived rules


@dataclass(frozen=True)
class DerivedRule:
    """Monotone inference: when every trigger literal holds, add atoms."""

    name: str
    params: tuple[str, ...]
    where: tuple[patterns.StaticTest, ...]
    trigger: tuple[patterns.Literal, ...]
    add: tuple[patterns.Literal, ...]

    @classmethod
    def from_dict(cls, raw: Mapping) -> "DerivedRule":
        trigger = tuple(patterns.parse_literal(t) for t in raw["if"])
        add = tuple(patterns.parse_literal(a) for a in raw["add"])
        if any(t.negated for t in trigger) or any(a.negated for a in add):
            raise DocumentError(f"rule {raw.get('name')}: rules must be positive (monotone)")
        return cls(
            name=raw["name"],
            params=tuple(raw["params"]),
            where=tuple(patterns.parse_test(t) for t in raw.get("where", ())),
            trigger=trigger,
            add=add,
        )

    def bindings(self, scope: patterns.Scope) -> list[dict[str, int]]:
        out: list[dict[str, int]] = [{}]
        for var in self.params:
            out = [{**b, var: oid} for b in out for oid in patterns.domain(scope, self.where, var, b)]
        return [b for b in out if patterns.guard_holds(self.where, b, scope)]


@dataclass(frozen=True)
class RuleSet:
    rules: tuple[DerivedRule, ...]
    key: str = field(default="", compare=False)

    def __iter__(self):
        return iter(self.rules)

    def __len__(self) -> int:
        return len(self.rules)


def load_rules(source: Any) -> RuleSet:
    if isinstance(source, (str, Path)) and not str(source).lstrip().startswith("{"):
        text = Path(source).read_text(encoding="utf-8")
    elif isinstance(source, Mapping):
        text = json.dumps(source, sort_keys=True)
    else:
        text = source
    data = json.loads(text)
    rules = tuple(DerivedRule.from_dict(r) for r in data["rules"])
    return RuleSet(rules, key=json.dumps(data, sort_keys=True))


_BUNDLED_RULES: RuleSet | None = None


def bundled_rules() -> RuleSet:
    global _BUNDLED_RULES
    if _BUNDLED_RULES is None:
        _BUNDLED_RULES = load_rules(data_path("rules.json"))
    return _BUNDLED_RULES


def apply_derived_rules(state: EnvironmentState, rules: Iterable[DerivedRule]) -> EnvironmentState:
    """Least fixpoint of the (monotone) rules; only adds atoms."""
    rules = list(rules)
    if not rules:
        return state
    atoms = set(state.atoms)
    grounded = []
    base = state.scope()
    for rule in rules:
        for b in rule.bindings(base):
            grounded.append((rule, b))
    changed = True
    while changed:
        changed = False
        scope = patterns.Scope(state.by_id, atoms, state.agent_id, state.pairings)
        for rule, b in grounded:
            if all(patterns.literal_holds(t, b, scope) for t in rule.trigger):
                for lit in rule.add:
                    for atom in patterns.literal_atoms(lit, b, scope):
                        if atom not in atoms:
                            atoms.add(atom)
                            changed = True
            if changed:
                break
    if len(atoms) == len(state.atoms):
        return state
    return state.with_atoms(atoms)


# ---------------------------------------------------------------------------
# Mutations


@dataclass(frozen=True)
class StateMutation:
    """Force ``token`` on (``set``) or off (``clear``) every matching object."""

    target: str | int
    change: str
    token: str

    def __post_init__(self):
        if self.change not in ("set", "clear"):
            raise MutationError(f"mutation change must be 'set' or 'clear', got {self.change!r}")

    @classmethod
    def from_dict(cls, raw: Mapping) -> "StateMutation":
        return cls(raw["target"], raw.get("change", "set"), raw["token"])


def resolve_target(state: EnvironmentState, target: str | int) -> tuple[int, ...]:
    if isinstance(target, int):
        if target not in state.by_id:
            raise MutationError(f"no object with id {target}")
        return (target,)
    ids = state.ids_by_name.get(target)
    if not ids:
        raise MutationError(f"no object named {target!r}")
    return ids


def apply_mutations(state: EnvironmentState, mutations: Iterable[StateMutation],
                    rules: RuleSet | None = None) -> EnvironmentState:
    mutations = list(mutations)
    if not mutations:
        return state
    nodes = dict(state.by_id)
    for m in mutations:
        for oid in resolve_target(state, m.target):
            node = nodes[oid]
            tokens = set(node.dynamic_states)
            if m.change == "set":
                tokens.add(m.token)
                tokens.discard(COMPLEMENT.get(m.token, ""))
            else:
                tokens.discard(m.token)
            updated = ObjectNode(node.id, node.name, node.static_properties, token_order(tokens))
            try:
                check_object_tokens(updated)
            except DocumentError as exc:
                raise MutationError(str(exc)) from None
            nodes[oid] = updated
    out = EnvironmentState(tuple(nodes[i] for i in sorted(nodes)), state.relations, state.agent_id, state.pairings)
    return apply_derived_rules(out, rules if rules is not None else bundled_rules())


# ---------------------------------------------------------------------------
# Bundled data


def data_path(name: str) -> Path:
    return Path(str(resources.files("hcplan") / "data" / name))


BUNDLED_ENVIRONMENTS = {"desk": "desk_env.json", "full": "full_env.json"}


def environment_path(name_or_path: str | Path) -> Path:
    if str(name_or_path) in BUNDLED_ENVIRONMENTS:
        return data_path(BUNDLED_ENVIRONMENTS[str(name_or_path)])
    return Path(name_or_path)


def load_bundled(name: str = "desk") -> EnvironmentState:
    return load_environment(environment_path(name))
