# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernel: the same API as ``_pykernel`` on packed 64-bit words.

Masks are stored sparsely as (word index, bits) pairs so a check touches
only the words a condition mentions.
"""

from array import array

from cpython.bytes cimport PyBytes_AS_STRING, PyBytes_FromStringAndSize
from libc.stdlib cimport free, malloc, realloc
from libc.string cimport memcpy

from .spec import CondSpec, KernelSpec, SearchResult

ctypedef unsigned long long u64

BACKEND = "cython"


def _sparse(mask, words, bits):
    """Append the non-zero words of ``mask``; return the (start, end) range."""
    start = len(words)
    w = 0
    while mask:
        chunk = mask & 0xFFFFFFFFFFFFFFFF
        if chunk:
            words.append(w)
            bits.append(chunk)
        mask >>= 64
        w += 1
    return start, len(words)


cdef class _CondTable:
    cdef int[::1] m_word
    cdef u64[::1] m_bits
    cdef int[::1] pos_s, pos_e, neg_s, neg_e, cl_s, cl_e
    cdef int[::1] lit_s, lit_e, lm_s, lm_e, l_pos

    def __init__(self, conds):
        words, bits = array("i"), array("Q")
        pos_s, pos_e, neg_s, neg_e, cl_s, cl_e = (array("i") for _ in range(6))
        lit_s, lit_e, lm_s, lm_e, l_pos = (array("i") for _ in range(5))
        for cond in conds:
            s, e = _sparse(cond.pos, words, bits)
            pos_s.append(s); pos_e.append(e)
            s, e = _sparse(cond.neg, words, bits)
            neg_s.append(s); neg_e.append(e)
            cl_s.append(len(lit_s))
            for clause in cond.clauses:
                lit_s.append(len(lm_s))
                for mask, positive in clause:
                    s, e = _sparse(mask, words, bits)
                    lm_s.append(s); lm_e.append(e); l_pos.append(1 if positive else 0)
                lit_e.append(len(lm_s))
            cl_e.append(len(lit_s))
        # memoryviews reject empty arrays of some formats; pad with one slot
        for arr in (words, lit_s, lit_e, lm_s, lm_e, l_pos):
            arr.append(0)
        bits.append(0)
        self.m_word, self.m_bits = words, bits
        self.pos_s, self.pos_e, self.neg_s, self.neg_e = pos_s or array("i", [0]), pos_e or array("i", [0]), neg_s or array("i", [0]), neg_e or array("i", [0])
        self.cl_s, self.cl_e = cl_s or array("i", [0]), cl_e or array("i", [0])
        self.lit_s, self.lit_e, self.lm_s, self.lm_e, self.l_pos = lit_s, lit_e, lm_s, lm_e, l_pos

    cdef inline bint check(self, int c, const u64* st) noexcept nogil:
        cdef int k, cl, l
        cdef bint hit, ok
        for k in range(self.pos_s[c], self.pos_e[c]):
            if (st[self.m_word[k]] & self.m_bits[k]) != self.m_bits[k]:
                return False
        for k in range(self.neg_s[c], self.neg_e[c]):
            if st[self.m_word[k]] & self.m_bits[k]:
                return False
        for cl in range(self.cl_s[c], self.cl_e[c]):
            ok = False
            for l in range(self.lit_s[cl], self.lit_e[cl]):
                hit = False
                for k in range(self.lm_s[l], self.lm_e[l]):
                    if st[self.m_word[k]] & self.m_bits[k]:
                        hit = True
                        break
                if hit == (self.l_pos[l] != 0):
                    ok = True
                    break
            if not ok:
                return False
        return True


cdef class Kernel:
    cdef readonly object spec
    cdef readonly int n_atoms
    cdef readonly int n_actions
    cdef int nw
    cdef _CondTable pre, eff
    cdef int[::1] mw
    cdef u64[::1] mb
    cdef int[::1] a_add_s, a_add_e, a_del_s, a_del_e, a_eff_s, a_eff_e
    cdef int[::1] e_add_s, e_add_e, e_del_s, e_del_e
    cdef int[::1] r_t_s, r_t_e, r_a_s, r_a_e
    cdef int n_rules
    cdef u64* scratch_a
    cdef u64* scratch_b
    cdef char* flags

    def __cinit__(self):
        self.scratch_a = NULL
        self.scratch_b = NULL
        self.flags = NULL

    def __init__(self, spec: KernelSpec):
        self.spec = spec
        self.n_atoms = spec.n_atoms
        self.n_actions = len(spec.actions)
        self.nw = max(1, (spec.n_atoms + 63) // 64)
        self.pre = _CondTable([a.pre for a in spec.actions])
        effects = [e for a in spec.actions for e in a.effects]
        self.eff = _CondTable([e.cond for e in effects])
        words, bits = array("i"), array("Q")
        tabs = {k: array("i") for k in ("aas", "aae", "ads", "ade", "aes", "aee", "eas", "eae", "eds", "ede",
                                         "rts", "rte", "ras", "rae")}
        n_eff = 0
        max_eff = 0
        for a in spec.actions:
            s, e = _sparse(a.add, words, bits); tabs["aas"].append(s); tabs["aae"].append(e)
            s, e = _sparse(a.delete, words, bits); tabs["ads"].append(s); tabs["ade"].append(e)
            tabs["aes"].append(n_eff)
            for eff in a.effects:
                s, e = _sparse(eff.add, words, bits); tabs["eas"].append(s); tabs["eae"].append(e)
                s, e = _sparse(eff.delete, words, bits); tabs["eds"].append(s); tabs["ede"].append(e)
                n_eff += 1
            tabs["aee"].append(n_eff)
            max_eff = max(max_eff, len(a.effects))
        for trigger, add in spec.rules:
            s, e = _sparse(trigger, words, bits); tabs["rts"].append(s); tabs["rte"].append(e)
            s, e = _sparse(add, words, bits); tabs["ras"].append(s); tabs["rae"].append(e)
        self.n_rules = len(spec.rules)
        for arr in tabs.values():
            arr.append(0)
        words.append(0)
        bits.append(0)
        self.mw, self.mb = words, bits
        self.a_add_s, self.a_add_e = tabs["aas"], tabs["aae"]
        self.a_del_s, self.a_del_e = tabs["ads"], tabs["ade"]
        self.a_eff_s, self.a_eff_e = tabs["aes"], tabs["aee"]
        self.e_add_s, self.e_add_e = tabs["eas"], tabs["eae"]
        self.e_del_s, self.e_del_e = tabs["eds"], tabs["ede"]
        self.r_t_s, self.r_t_e = tabs["rts"], tabs["rte"]
        self.r_a_s, self.r_a_e = tabs["ras"], tabs["rae"]
        self.scratch_a = <u64*> malloc(self.nw * sizeof(u64))
        self.scratch_b = <u64*> malloc(self.nw * sizeof(u64))
        self.flags = <char*> malloc(max_eff + 1)
        if self.scratch_a == NULL or self.scratch_b == NULL or self.flags == NULL:
            raise MemoryError()

    def __dealloc__(self):
        free(self.scratch_a)
        free(self.scratch_b)
        free(self.flags)

    # -- conversions -------------------------------------------------------

    cdef void _load(self, object state, u64* out) except *:
        cdef bytes raw = state.to_bytes(self.nw * 8, "little")
        memcpy(out, PyBytes_AS_STRING(raw), self.nw * 8)

    cdef object _int(self, const u64* st):
        return int.from_bytes(PyBytes_FromStringAndSize(<const char*> st, self.nw * 8), "little")

    # -- core --------------------------------------------------------------

    cdef void _closure(self, u64* st) noexcept nogil:
        cdef bint changed = True
        cdef bint fire
        cdef int r, k
        while changed:
            changed = False
            for r in range(self.n_rules):
                fire = True
                for k in range(self.r_t_s[r], self.r_t_e[r]):
                    if (st[self.mw[k]] & self.mb[k]) != self.mb[k]:
                        fire = False
                        break
                if not fire:
                    continue
                for k in range(self.r_a_s[r], self.r_a_e[r]):
                    if (st[self.mw[k]] & self.mb[k]) != self.mb[k]:
                        st[self.mw[k]] |= self.mb[k]
                        changed = True

    cdef void _apply(self, const u64* src, u64* dst, int a) noexcept nogil:
        cdef int k, e, es, ee
        memcpy(dst, src, self.nw * sizeof(u64))
        es = self.a_eff_s[a]
        ee = self.a_eff_e[a]
        for k in range(self.a_del_s[a], self.a_del_e[a]):
            dst[self.mw[k]] &= ~self.mb[k]
        for e in range(es, ee):
            if self.eff.check(e, src):
                self.flags[e - es] = 1
                for k in range(self.e_del_s[e], self.e_del_e[e]):
                    dst[self.mw[k]] &= ~self.mb[k]
            else:
                self.flags[e - es] = 0
        for k in range(self.a_add_s[a], self.a_add_e[a]):
            dst[self.mw[k]] |= self.mb[k]
        for e in range(es, ee):
            if self.flags[e - es]:
                for k in range(self.e_add_s[e], self.e_add_e[e]):
                    dst[self.mw[k]] |= self.mb[k]
        self._closure(dst)

    # -- public API ----------------------------------------------------------

    def is_applicable(self, state, int a):
        if a < 0 or a >= self.n_actions:
            raise IndexError(a)
        self._load(state, self.scratch_a)
        return self.pre.check(a, self.scratch_a)

    def applicable(self, state):
        cdef int a
        self._load(state, self.scratch_a)
        return [a for a in range(self.n_actions) if self.pre.check(a, self.scratch_a)]

    def apply(self, state, int a):
        if a < 0 or a >= self.n_actions:
            raise IndexError(a)
        self._load(state, self.scratch_a)
        self._apply(self.scratch_a, self.scratch_b, a)
        return self._int(self.scratch_b)

    def closure(self, state):
        self._load(state, self.scratch_a)
        self._closure(self.scratch_a)
        return self._int(self.scratch_a)

    def holds(self, state, cond: CondSpec):
        cdef _CondTable table = _CondTable([cond])
        self._load(state, self.scratch_a)
        return table.check(0, self.scratch_a)

    def search(self, init, goal: CondSpec, failure: CondSpec | None = None,
               int bound=20, long max_states=2_000_000):
        """Layered BFS; goal tested on generation, failure states pruned."""
        cdef _CondTable conds = _CondTable([goal, failure if failure is not None else goal])
        cdef bint use_failure = failure is not None
        cdef int nw = self.nw
        cdef size_t cap = 1024
        cdef size_t count = 0
        cdef u64* store = <u64*> malloc(cap * nw * sizeof(u64))
        cdef u64* cur
        cdef u64* nxt
        cdef u64* grown
        cdef int a, depth
        cdef long idx, expanded = 0
        cdef bytes key
        if store == NULL:
            raise MemoryError()
        try:
            self._load(init, store)
            count = 1
            if conds.check(0, store):
                return SearchResult(True, [], 0, False, 1)
            if use_failure and conds.check(1, store):
                return SearchResult(False, [], 0, False, 1)
            visited = {PyBytes_FromStringAndSize(<const char*> store, nw * 8): 0}
            parent = [-1]
            via = [-1]
            frontier = [0]
            nxt = self.scratch_b
            for depth in range(bound):
                layer = []
                for idx in frontier:
                    expanded += 1
                    for a in range(self.n_actions):
                        cur = store + idx * nw
                        if not self.pre.check(a, cur):
                            continue
                        self._apply(cur, nxt, a)
                        key = PyBytes_FromStringAndSize(<const char*> nxt, nw * 8)
                        if key in visited:
                            continue
                        if count == cap:
                            cap *= 2
                            grown = <u64*> realloc(store, cap * nw * sizeof(u64))
                            if grown == NULL:
                                raise MemoryError()
                            store = grown
                        memcpy(store + count * nw, nxt, nw * sizeof(u64))
                        visited[key] = count
                        parent.append(idx)
                        via.append(a)
                        count += 1
                        if conds.check(0, nxt):
                            return SearchResult(True, _trace(parent, via, count - 1), expanded, False, count)
                        if use_failure and conds.check(1, nxt):
                            continue
                        layer.append(count - 1)
                        if <long> count > max_states:
                            return SearchResult(False, [], expanded, True, count)
                if not layer:
                    break
                frontier = layer
            return SearchResult(False, [], expanded, False, count)
        finally:
            free(store)


def _trace(parent, via, long idx):
    plan = []
    while via[idx] >= 0:
        plan.append(via[idx])
        idx = parent[idx]
    plan.reverse()
    return plan
