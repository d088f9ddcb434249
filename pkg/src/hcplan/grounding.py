"""Compile a world plus the schema ledger into a propositional problem.

Fluent atoms (every state token, and the relations actions can change) get
bit positions; everything else is fixed scenery and is folded into
constants while grounding. The result drives a :mod:`hcplan.kernel`
backend.
"""

from __future__ import annotations

import threading
from collections import OrderedDict
from itertools import product
from typing import Iterable

from . import patterns
from .actions import GroundedAction, SchemaLedger, bundled_ledger
from .env import EnvironmentState, RuleSet, bundled_rules
from .errors import InapplicableActionError, LedgerError
from .kernel import FALSE, TRUE, ActionSpec, CondSpec, EffectSpec, Kernel, KernelSpec

_CONST_TRUE = ("const", True)
_CONST_FALSE = ("const", False)


def _atom_key(atom: tuple) -> tuple:
    if len(atom) == 2:
        return (0, atom[1], atom[0])
    return (1, atom[0], atom[1], atom[2])


class Problem:
    """Grounded actions, derived rules and the atom index for one world."""

    def __init__(self, state: EnvironmentState, ledger: SchemaLedger, rules: RuleSet,
                 extra_atoms: Iterable[tuple] = (), kernel_cls=None):
        self.template = state
        self.ledger = ledger
        self.rules = rules
        self.static_key = state.static_key
        self.static_atoms = frozenset(r for r in state.relations if not state.is_fluent_relation(r))
        self._static = patterns.Scope(state.by_id, self.static_atoms, state.agent_id, state.pairings)

        grounded = [(schema, b) for schema in ledger.active() for b in schema.bindings(self._static)]
        rule_bindings = [(rule, b) for rule in rules for b in rule.bindings(self._static)]

        universe = {a for a in state.atoms if a not in self.static_atoms}
        universe.update(extra_atoms)
        for schema, b in grounded:
            universe.update(self._atoms(schema.add, b))
            for eff in schema.conditional:
                for tb in self._targets(eff, b):
                    universe.update(self._atoms(eff.add, tb))
        for rule, b in rule_bindings:
            universe.update(self._atoms(rule.add, b))
        self.universe: tuple[tuple, ...] = tuple(sorted(universe, key=_atom_key))
        self.bit = {a: i for i, a in enumerate(self.universe)}
        self._index_universe()

        self.actions: list[GroundedAction] = []
        specs: list[ActionSpec] = []
        for schema, b in grounded:
            spec = self._compile_action(schema, b)
            if spec is None:
                continue
            args = tuple((state.by_id[b[v]].name, b[v]) for v in schema.params)
            self.actions.append(GroundedAction(schema.verb, args))
            specs.append(spec)
        self.action_index = {(a.verb, a.ids): i for i, a in enumerate(self.actions)}
        rule_specs = []
        for rule, b in rule_bindings:
            cond = self._compile_clauses([patterns.Clause((lit,)) for lit in rule.trigger], b)
            if cond.trivially_false:
                continue
            if cond.neg or cond.clauses:
                raise LedgerError(f"rule {rule.name}: triggers must be plain positive atoms")
            rule_specs.append((cond.pos, self._mask(self._atoms(rule.add, b))))
        self.spec = KernelSpec(len(self.universe), tuple(specs), tuple(rule_specs))
        self.kernel = (kernel_cls or Kernel)(self.spec)

    # -- universe helpers ----------------------------------------------------

    def _index_universe(self) -> None:
        by_s: dict = {}
        by_o: dict = {}
        by_tok: dict = {}
        for a in self.universe:
            if len(a) == 2:
                by_tok.setdefault(a[0], []).append(a)
            else:
                s, k, o = a
                by_s.setdefault((k, s), []).append(a)
                by_o.setdefault((k, o), []).append(a)
        self._by_s, self._by_o, self._by_tok = by_s, by_o, by_tok

    def _atoms(self, lits, binding) -> list[tuple]:
        out = []
        for lit in lits:
            args = [patterns.resolve_arg(a, binding, self._static) for a in lit.args]
            if any(a is None for a in args):
                continue
            if patterns.WILD in args:
                raise LedgerError(f"wildcards are not allowed in added atoms: {lit}")
            out.append((lit.predicate, args[0]) if len(args) == 1 else (args[0], lit.predicate, args[1]))
        return out

    def _targets(self, eff: patterns.Effect, binding) -> list[dict]:
        if eff.var is None:
            return [binding]
        return [
            {**binding, eff.var: oid}
            for oid in patterns.domain(self._static, eff.where, eff.var, binding)
            if patterns.guard_holds(eff.where, {**binding, eff.var: oid}, self._static)
        ]

    def _mask(self, atoms: Iterable[tuple]) -> int:
        m = 0
        for a in atoms:
            m |= 1 << self.bit[a]
        return m

    def matching(self, predicate: str, args: tuple) -> tuple[int, bool]:
        """(mask of fluent matches, whether a static atom matches) for a pattern.

        ``args`` entries are ids or ``patterns.WILD``.
        """
        if len(args) == 1:
            (o,) = args
            if o == patterns.WILD:
                return self._mask(self._by_tok.get(predicate, ())), False
            atom = (predicate, o)
            return (1 << self.bit[atom]) if atom in self.bit else 0, False
        s, o = args
        if patterns.WILD not in (s, o):
            atom = (s, predicate, o)
            if atom in self.bit:
                return 1 << self.bit[atom], False
            return 0, atom in self.static_atoms
        if s == patterns.WILD and o == patterns.WILD:
            fluent = [a for a in self.universe if len(a) == 3 and a[1] == predicate]
        elif s == patterns.WILD:
            fluent = self._by_o.get((predicate, o), ())
        else:
            fluent = self._by_s.get((predicate, s), ())
        static = self._static.related(predicate, None if s == patterns.WILD else s, None if o == patterns.WILD else o)
        return self._mask(fluent), static

    # -- condition compilation ----------------------------------------------------

    def _literal(self, lit: patterns.Literal, binding):
        args = tuple(patterns.resolve_arg(a, binding, self._static) for a in lit.args)
        if any(a is None for a in args):
            return _CONST_TRUE if lit.negated else _CONST_FALSE
        mask, static = self.matching(lit.predicate, args)
        if static:
            return _CONST_FALSE if lit.negated else _CONST_TRUE
        if not mask:
            return _CONST_TRUE if lit.negated else _CONST_FALSE
        return ("mask", mask, not lit.negated)

    @staticmethod
    def _fold(pos: int, neg: int, clauses: list, compiled: list) -> tuple[int, int] | None:
        """Add one disjunction to the accumulators; None means it is false."""
        lits = []
        for c in compiled:
            if c is _CONST_TRUE:
                return pos, neg
            if c is not _CONST_FALSE:
                lits.append((c[1], c[2]))
        if not lits:
            return None
        if len(lits) == 1:
            mask, positive = lits[0]
            if not positive:
                return pos, neg | mask
            if mask & (mask - 1) == 0:
                return pos | mask, neg
        clauses.append(tuple(lits))
        return pos, neg

    def _compile_clauses(self, items, binding) -> CondSpec:
        pos = neg = 0
        clauses: list = []
        for item in items:
            if not patterns.guard_holds(item.guard, binding, self._static):
                continue
            if isinstance(item, patterns.Clause):
                groups = [[self._literal(lit, binding) for lit in item.literals]]
            else:
                groups = self._quantified(item, binding)
                if groups is None:
                    return FALSE
            for compiled in groups:
                folded = self._fold(pos, neg, clauses, compiled)
                if folded is None:
                    return FALSE
                pos, neg = folded
        if pos & neg:
            return FALSE
        return CondSpec(pos, neg, tuple(sorted(set(clauses))))

    def _quantified(self, q: patterns.Quantified, binding):
        domain = [
            oid for oid in patterns.domain(self._static, q.where, q.var, binding)
            if patterns.guard_holds(q.where, {**binding, q.var: oid}, self._static)
        ]
        if q.kind == "forall":
            return [[self._literal(lit, {**binding, q.var: oid}) for lit in q.body] for oid in domain]
        # exists: a disjunction of conjunctions, distributed into clauses
        terms = []
        for oid in domain:
            term = []
            for lit in q.body:
                c = self._literal(lit, {**binding, q.var: oid})
                if c is _CONST_FALSE:
                    term = None
                    break
                if c is not _CONST_TRUE:
                    term.append(c)
            if term is None:
                continue
            if not term:
                return []
            terms.append(term)
        if not terms:
            return None
        return [list(choice) for choice in product(*terms)]

    def _compile_action(self, schema, binding) -> ActionSpec | None:
        pre = self._compile_clauses(schema.preconditions, binding)
        if pre.trivially_false:
            return None
        add = self._mask(self._atoms(schema.add, binding))
        delete = self._delete_mask(schema.delete, binding)
        effects = []
        for eff in schema.conditional:
            for tb in self._targets(eff, binding):
                cond = self._compile_clauses(eff.condition, tb)
                if cond.trivially_false:
                    continue
                e_add = self._mask(self._atoms(eff.add, tb))
                e_del = self._delete_mask(eff.delete, tb)
                if cond.trivially_true:
                    add |= e_add
                    delete |= e_del
                elif e_add or e_del:
                    effects.append(EffectSpec(cond, e_add, e_del))
        return ActionSpec(pre, add, delete, tuple(effects))

    def _delete_mask(self, lits, binding) -> int:
        m = 0
        for lit in lits:
            args = tuple(patterns.resolve_arg(a, binding, self._static) for a in lit.args)
            if any(a is None for a in args):
                continue
            mask, static = self.matching(lit.predicate, args)
            if static:
                raise LedgerError(f"delete {lit} would remove a fixed relation")
            m |= mask
        return m

    # -- states --------------------------------------------------------------

    def covers(self, state: EnvironmentState) -> bool:
        return state.static_key == self.static_key and all(
            a in self.bit or a in self.static_atoms for a in state.atoms
        )

    def encode(self, state: EnvironmentState) -> int:
        bits = 0
        for a in state.atoms:
            i = self.bit.get(a)
            if i is not None:
                bits |= 1 << i
            elif a not in self.static_atoms:
                raise KeyError(a)
        return bits

    def decode(self, bits: int) -> EnvironmentState:
        atoms = set(self.static_atoms)
        i = 0
        while bits:
            if bits & 1:
                atoms.add(self.universe[i])
            bits >>= 1
            i += 1
        return self.template.with_atoms(atoms)

    def atoms_of(self, bits: int) -> frozenset:
        return frozenset(self.universe[i] for i in range(bits.bit_length()) if bits >> i & 1)

    def applicable(self, bits: int) -> list[int]:
        return self.kernel.applicable(bits)

    def apply_index(self, bits: int, a: int) -> int:
        return self.kernel.apply(bits, a)

    def lookup(self, action: GroundedAction) -> int | None:
        i = self.action_index.get((action.verb, action.ids))
        if i is None or self.actions[i] != action:
            return None
        return i

    def apply_checked(self, bits: int, action: GroundedAction, state: EnvironmentState | None = None) -> int:
        i = self.lookup(action)
        if i is None or not self.kernel.is_applicable(bits, i):
            from .reference import failed_precondition

            reason = failed_precondition(state if state is not None else self.decode(bits), action, self.ledger)
            raise InapplicableActionError(action, reason or "not applicable")
        return self.kernel.apply(bits, i)


_CACHE: OrderedDict = OrderedDict()
_CACHE_SIZE = 8
_CACHE_LOCK = threading.RLock()


def problem_for(state: EnvironmentState, ledger: SchemaLedger | None = None,
                rules: RuleSet | None = None, kernel_cls=None) -> Problem:
    """Cached :class:`Problem` for the world ``state`` belongs to.

    States reached by mutations may carry atoms no action adds; the problem
    is then rebuilt with those atoms in its universe.
    """
    ledger = ledger or bundled_ledger()
    rules = rules if rules is not None else bundled_rules()
    key = (state.static_key, ledger.key, rules.key, kernel_cls)
    with _CACHE_LOCK:
        problem = _CACHE.get(key)
        if problem is not None:
            _CACHE.move_to_end(key)
            if problem.covers(state):
                return problem
            extra = set(problem.universe) | {a for a in state.atoms if a not in problem.static_atoms}
        else:
            extra = set()
        problem = Problem(state, ledger, rules, extra, kernel_cls)
        _CACHE[key] = problem
        while len(_CACHE) > _CACHE_SIZE:
            _CACHE.popitem(last=False)
    return problem


__all__ = ["Problem", "problem_for", "TRUE", "FALSE"]
