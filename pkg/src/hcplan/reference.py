"""Slow, direct interpreter of the schema ledger over atom sets.

It never compiles anything: preconditions and effects are evaluated
literal by literal against :class:`EnvironmentState.atoms`. The compiled
problem is tested against it, and it supplies readable diagnostics when an
action is rejected.
"""

from __future__ import annotations

from typing import Mapping

from . import patterns
from .actions import ActionSchema, GroundedAction, SchemaLedger, bundled_ledger
from .env import EnvironmentState, RuleSet, apply_derived_rules, bundled_rules
from .errors import InapplicableActionError


def _precondition_holds(pre, binding: Mapping[str, int], scope: patterns.Scope) -> bool:
    if not patterns.guard_holds(pre.guard, binding, scope):
        return True
    if isinstance(pre, patterns.Clause):
        return any(patterns.literal_holds(lit, binding, scope) for lit in pre.literals)
    domain = [oid for oid in patterns.domain(scope, pre.where, pre.var, binding)
              if patterns.guard_holds(pre.where, {**binding, pre.var: oid}, scope)]
    if pre.kind == "forall":
        return all(
            any(patterns.literal_holds(lit, {**binding, pre.var: oid}, scope) for lit in pre.body)
            for oid in domain
        )
    return any(
        all(patterns.literal_holds(lit, {**binding, pre.var: oid}, scope) for lit in pre.body)
        for oid in domain
    )


def _describe(pre) -> str:
    if isinstance(pre, patterns.Clause):
        return str(pre)
    body = (" | " if pre.kind == "forall" else " & ").join(str(lit) for lit in pre.body)
    return f"{pre.kind} {pre.var}: {body}"


def _binding(schema: ActionSchema, action: GroundedAction) -> dict[str, int]:
    return dict(zip(schema.params, action.ids))


def failed_precondition(state: EnvironmentState, action: GroundedAction,
                        ledger: SchemaLedger | None = None) -> str | None:
    """First reason ``action`` cannot run in ``state``, or None if it can."""
    ledger = ledger or bundled_ledger()
    if action.verb not in ledger:
        return f"verb {action.verb} is not available"
    schema = ledger[action.verb]
    if len(action.args) != schema.arity:
        return f"{action.verb} takes {schema.arity} argument(s)"
    for name, oid in action.args:
        node = state.by_id.get(oid)
        if node is None:
            return f"no object with id {oid}"
        if node.name != name:
            return f"object {oid} is named {node.name}, not {name}"
        if oid == state.agent_id:
            return "the agent cannot be an argument"
    scope = state.scope()
    binding = _binding(schema, action)
    for test in schema.where:
        if not patterns.static_test(test, binding, scope):
            return f"static filter failed: {_test_text(test)}"
    for pre in schema.preconditions:
        if not _precondition_holds(pre, binding, scope):
            return _describe(pre)
    return None


def _test_text(test: patterns.StaticTest) -> str:
    if test.op == "prop":
        return f"{'!' if test.negated else ''}{test.args[0]}({test.args[1]})"
    if test.op in ("eq", "neq"):
        return f"{test.args[0]} {'==' if test.op == 'eq' else '!='} {test.args[1]}"
    if test.op.startswith("name"):
        return f"name({test.args[0]}) {'==' if test.op == 'name_eq' else '!='} {test.args[1]}"
    return f"paired({', '.join(test.args)})"


def reference_applicable(state: EnvironmentState, ledger: SchemaLedger | None = None) -> list[GroundedAction]:
    ledger = ledger or bundled_ledger()
    scope = state.scope()
    out = []
    for schema in ledger.active():
        for b in schema.bindings(scope):
            if all(_precondition_holds(p, b, scope) for p in schema.preconditions):
                args = tuple((state.by_id[b[v]].name, b[v]) for v in schema.params)
                out.append(GroundedAction(schema.verb, args))
    return out


def reference_apply(state: EnvironmentState, action: GroundedAction, ledger: SchemaLedger | None = None,
                    rules: RuleSet | None = None) -> EnvironmentState:
    """Conditions read the pre-state; every delete lands before any add."""
    ledger = ledger or bundled_ledger()
    reason = failed_precondition(state, action, ledger)
    if reason is not None:
        raise InapplicableActionError(action, reason)
    schema = ledger[action.verb]
    scope = state.scope()
    binding = _binding(schema, action)
    adds: set = set()
    dels: set = set()

    def collect(lits, b, into):
        for lit in lits:
            into.update(patterns.literal_atoms(lit, b, scope))

    collect(schema.add, binding, adds)
    collect(schema.delete, binding, dels)
    for eff in schema.conditional:
        if eff.var is None:
            targets = [binding]
        else:
            targets = [{**binding, eff.var: oid}
                       for oid in patterns.domain(scope, eff.where, eff.var, binding)
                       if patterns.guard_holds(eff.where, {**binding, eff.var: oid}, scope)]
        for b in targets:
            if all(_precondition_holds(c, b, scope) for c in eff.condition):
                collect(eff.add, b, adds)
                collect(eff.delete, b, dels)
    atoms = (set(state.atoms) - dels) | adds
    out = state.with_atoms(atoms)
    return apply_derived_rules(out, rules if rules is not None else bundled_rules())
