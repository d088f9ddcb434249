"""Pure-Python kernel over int bitsets. Reference for the compiled one."""

from __future__ import annotations

from .spec import CondSpec, KernelSpec, SearchResult, holds

BACKEND = "python"


class Kernel:
    def __init__(self, spec: KernelSpec):
        self.spec = spec
        self.n_atoms = spec.n_atoms
        self._pre = [(a.pre.pos, a.pre.neg, a.pre.clauses) for a in spec.actions]
        self._eff = [
            (a.add, a.delete, tuple((e.cond, e.add, e.delete) for e in a.effects))
            for a in spec.actions
        ]
        self._rules = tuple(spec.rules)

    @property
    def n_actions(self) -> int:
        return len(self._pre)

    def is_applicable(self, state: int, a: int) -> bool:
        pos, neg, clauses = self._pre[a]
        if state & pos != pos or state & neg:
            return False
        for clause in clauses:
            for mask, positive in clause:
                if bool(state & mask) == positive:
                    break
            else:
                return False
        return True

    def applicable(self, state: int) -> list[int]:
        out = []
        for a, (pos, neg, clauses) in enumerate(self._pre):
            if state & pos != pos or state & neg:
                continue
            ok = True
            for clause in clauses:
                for mask, positive in clause:
                    if bool(state & mask) == positive:
                        break
                else:
                    ok = False
                    break
            if ok:
                out.append(a)
        return out

    def closure(self, state: int) -> int:
        changed = True
        while changed:
            changed = False
            for trigger, add in self._rules:
                if state & trigger == trigger and add & ~state:
                    state |= add
                    changed = True
        return state

    def apply(self, state: int, a: int) -> int:
        add, delete, effects = self._eff[a]
        for cond, e_add, e_del in effects:
            if holds(state, cond):
                add |= e_add
                delete |= e_del
        return self.closure((state & ~delete) | add)

    def holds(self, state: int, cond: CondSpec) -> bool:
        return holds(state, cond)

    def search(self, init: int, goal: CondSpec, failure: CondSpec | None = None,
               bound: int = 20, max_states: int = 2_000_000) -> SearchResult:
        """Layered BFS; goal tested on generation, failure states pruned."""
        if holds(init, goal):
            return SearchResult(True, [], 0, False, 1)
        if failure is not None and holds(init, failure):
            return SearchResult(False, [], 0, False, 1)
        parent: dict[int, tuple[int, int]] = {init: (-1, -1)}
        frontier = [init]
        expanded = 0
        for _depth in range(bound):
            nxt_layer = []
            for state in frontier:
                expanded += 1
                for a in self.applicable(state):
                    nxt = self.apply(state, a)
                    if nxt in parent:
                        continue
                    parent[nxt] = (state, a)
                    if holds(nxt, goal):
                        return SearchResult(True, _trace(parent, nxt), expanded, False, len(parent))
                    if failure is not None and holds(nxt, failure):
                        continue
                    nxt_layer.append(nxt)
                    if len(parent) > max_states:
                        return SearchResult(False, [], expanded, True, len(parent))
            if not nxt_layer:
                break
            frontier = nxt_layer
        return SearchResult(False, [], expanded, False, len(parent))


def _trace(parent: dict[int, tuple[int, int]], state: int) -> list[int]:
    plan = []
    while True:
        prev, a = parent[state]
        if a < 0:
            break
        plan.append(a)
        state = prev
    plan.reverse()
    return plan
