"""Plain-data description of a compiled problem, shared by both kernels.

States are Python ints used as bitsets over the fluent atoms.

A :class:`CondSpec` holds when every ``pos`` bit is set, every ``neg`` bit
is clear, and each clause has a true literal. A clause literal
``(mask, True)`` is true when some bit of ``mask`` is set; ``(mask, False)``
is true when every bit of ``mask`` is clear. An empty clause is false.
"""

from __future__ import annotations

from dataclasses import dataclass

Literal = tuple[int, bool]
ClauseSpec = tuple[Literal, ...]


@dataclass(frozen=True)
class CondSpec:
    pos: int = 0
    neg: int = 0
    clauses: tuple[ClauseSpec, ...] = ()

    @property
    def trivially_true(self) -> bool:
        return not (self.pos or self.neg or self.clauses)

    @property
    def trivially_false(self) -> bool:
        return any(not c for c in self.clauses) or bool(self.pos & self.neg)


FALSE = CondSpec(clauses=((),))
TRUE = CondSpec()


@dataclass(frozen=True)
class EffectSpec:
    cond: CondSpec
    add: int = 0
    delete: int = 0


@dataclass(frozen=True)
class ActionSpec:
    pre: CondSpec
    add: int = 0
    delete: int = 0
    effects: tuple[EffectSpec, ...] = ()


@dataclass(frozen=True)
class KernelSpec:
    n_atoms: int
    actions: tuple[ActionSpec, ...]
    rules: tuple[tuple[int, int], ...] = ()  # (trigger bits, added bits)


@dataclass
class SearchResult:
    found: bool
    plan: list[int]
    expanded: int
    capped: bool
    generated: int = 0


def holds(state: int, cond: CondSpec) -> bool:
    if state & cond.pos != cond.pos or state & cond.neg:
        return False
    for clause in cond.clauses:
        for mask, positive in clause:
            if bool(state & mask) == positive:
                break
        else:
            return False
    return True
