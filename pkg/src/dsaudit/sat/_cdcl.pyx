# cython: language_level=3
"""Compiled CDCL core.

Step-for-step port of ``_pysolver.Solver`` onto C arrays. Any change to
the search (watch order, tie breaking, restart schedule) must be made in
both files; ``tests/test_sat_backends.py`` compares them model by model.
"""
from libc.stdlib cimport malloc, realloc, free
from libc.string cimport memset
import time

from dsaudit.sat._pysolver import SAT, UNSAT, UNKNOWN, luby


cdef struct IVec:
    int* data
    int size
    int cap


cdef int ivec_push(IVec* v, int x) except -1:
    cdef int ncap
    cdef int* nd
    if v.size == v.cap:
        ncap = 8 if v.cap == 0 else 2 * v.cap
        nd = <int*> realloc(v.data, ncap * sizeof(int))
        if nd == NULL:
            raise MemoryError()
        v.data = nd
        v.cap = ncap
    v.data[v.size] = x
    v.size += 1
    return 0


cdef inline void ivec_free(IVec* v):
    if v.data != NULL:
        free(v.data)
    v.data = NULL
    v.size = 0
    v.cap = 0


cdef class Solver:
    """Incremental CDCL solver with an assumptions interface (compiled)."""

    cdef public int nvars
    cdef public bint ok
    cdef public long long decisions
    cdef public long long propagations
    cdef public long long conflicts
    cdef public list model
    cdef int cap_vars
    cdef signed char* vals
    cdef int* level
    cdef int* reason
    cdef double* activity
    cdef char* seen
    cdef IVec* watches
    cdef IVec lits
    cdef IVec cstart
    cdef IVec csize
    cdef IVec trail
    cdef IVec trail_lim
    cdef IVec learnt
    cdef int qhead
    cdef double var_inc
    cdef double var_decay
    cdef int restart_base

    backend = "cython"

    def __cinit__(self, int num_vars=0):
        self.nvars = 0
        self.cap_vars = 0
        self.vals = NULL
        self.level = NULL
        self.reason = NULL
        self.activity = NULL
        self.seen = NULL
        self.watches = NULL
        memset(&self.lits, 0, sizeof(IVec))
        memset(&self.cstart, 0, sizeof(IVec))
        memset(&self.csize, 0, sizeof(IVec))
        memset(&self.trail, 0, sizeof(IVec))
        memset(&self.trail_lim, 0, sizeof(IVec))
        memset(&self.learnt, 0, sizeof(IVec))

    def __init__(self, int num_vars=0):
        self.ok = True
        self.qhead = 0
        self.var_inc = 1.0
        self.var_decay = 0.95
        self.restart_base = 100
        self.decisions = 0
        self.propagations = 0
        self.conflicts = 0
        self.model = []
        self._reserve(num_vars + 1)
        cdef int k
        for k in range(num_vars):
            self.new_var()

    def __dealloc__(self):
        cdef int k
        if self.watches != NULL:
            for k in range(2 * self.cap_vars):
                ivec_free(&self.watches[k])
            free(self.watches)
        free(self.vals)
        free(self.level)
        free(self.reason)
        free(self.activity)
        free(self.seen)
        ivec_free(&self.lits)
        ivec_free(&self.cstart)
        ivec_free(&self.csize)
        ivec_free(&self.trail)
        ivec_free(&self.trail_lim)
        ivec_free(&self.learnt)

    cdef int _reserve(self, int want) except -1:
        cdef int ncap, k
        if want <= self.cap_vars:
            return 0
        ncap = self.cap_vars if self.cap_vars > 0 else 16
        while ncap < want:
            ncap *= 2
        self.vals = <signed char*> realloc(self.vals, ncap * sizeof(signed char))
        self.level = <int*> realloc(self.level, ncap * sizeof(int))
        self.reason = <int*> realloc(self.reason, ncap * sizeof(int))
        self.activity = <double*> realloc(self.activity, ncap * sizeof(double))
        self.seen = <char*> realloc(self.seen, ncap * sizeof(char))
        self.watches = <IVec*> realloc(self.watches, 2 * ncap * sizeof(IVec))
        if (self.vals == NULL or self.level == NULL or self.reason == NULL
                or self.activity == NULL or self.seen == NULL or self.watches == NULL):
            raise MemoryError()
        for k in range(self.cap_vars, ncap):
            self.vals[k] = 0
            self.level[k] = 0
            self.reason[k] = -1
            self.activity[k] = 0.0
            self.seen[k] = 0
        for k in range(2 * self.cap_vars, 2 * ncap):
            self.watches[k].data = NULL
            self.watches[k].size = 0
            self.watches[k].cap = 0
        self.cap_vars = ncap
        return 0

    def new_var(self):
        self._reserve(self.nvars + 2)
        self.nvars += 1
        return self.nvars

    def set_activity(self, int var, double value):
        self.activity[var] = value

    cdef inline int _value(self, int lit) nogil:
        cdef int v = self.vals[lit >> 1]
        return -v if lit & 1 else v

    cdef inline int _enqueue(self, int lit, int reason) except -1:
        cdef int var = lit >> 1
        self.vals[var] = -1 if lit & 1 else 1
        self.level[var] = self.trail_lim.size
        self.reason[var] = reason
        ivec_push(&self.trail, lit)
        return 0

    cdef int _store_clause(self, list clause) except -1:
        cdef int ci = self.cstart.size
        ivec_push(&self.cstart, self.lits.size)
        ivec_push(&self.csize, len(clause))
        for lit in clause:
            ivec_push(&self.lits, lit)
        ivec_push(&self.watches[clause[0]], ci)
        ivec_push(&self.watches[clause[1]], ci)
        return ci

    def add_clause(self, lits):
        """Add a clause at decision level 0; returns False once the DB is UNSAT."""
        if not self.ok:
            return False
        self._backtrack(0)
        internal = set()
        for lit in lits:
            var = lit if lit > 0 else -lit
            if var == 0 or var > self.nvars:
                raise ValueError(f"literal {lit} out of range 1..{self.nvars}")
            internal.add(2 * var if lit > 0 else 2 * var + 1)
        clause = []
        for ilit in sorted(internal):
            if ilit ^ 1 in internal:
                return True
            val = self._value(ilit)
            if val == 1:
                return True
            if val == 0:
                clause.append(ilit)
        if not clause:
            self.ok = False
            return False
        if len(clause) == 1:
            self._enqueue(clause[0], -1)
            if self._propagate() != -1:
                self.ok = False
            return self.ok
        self._store_clause(clause)
        return True

    cdef int _propagate(self) except -2:
        cdef int p, false_lit, i, j, n, ci, first, fv, k, lk, kv, start, size
        cdef int* c
        cdef IVec* ws
        cdef bint found
        while self.qhead < self.trail.size:
            p = self.trail.data[self.qhead]
            self.qhead += 1
            self.propagations += 1
            false_lit = p ^ 1
            ws = &self.watches[false_lit]
            i = 0
            j = 0
            n = ws.size
            while i < n:
                ci = ws.data[i]
                i += 1
                start = self.cstart.data[ci]
                size = self.csize.data[ci]
                c = &self.lits.data[start]
                if c[0] == false_lit:
                    c[0] = c[1]
                    c[1] = false_lit
                first = c[0]
                fv = self._value(first)
                if fv == 1:
                    ws.data[j] = ci
                    j += 1
                    continue
                found = False
                for k in range(2, size):
                    lk = c[k]
                    kv = self._value(lk)
                    if kv != -1:
                        c[1] = lk
                        c[k] = false_lit
                        ivec_push(&self.watches[lk], ci)
                        # the push may have reallocated a different vector only
                        found = True
                        break
                if found:
                    continue
                ws.data[j] = ci
                j += 1
                if fv == -1:
                    while i < n:
                        ws.data[j] = ws.data[i]
                        j += 1
                        i += 1
                    ws.size = j
                    self.qhead = self.trail.size
                    return ci
                self._enqueue(first, ci)
            ws.size = j
        return -1

    cdef void _bump(self, int var):
        cdef int v
        cdef double act = self.activity[var] + self.var_inc
        self.activity[var] = act
        if act > 1e100:
            for v in range(1, self.nvars + 1):
                self.activity[v] *= 1e-100
            self.var_inc *= 1e-100

    cdef int _analyze(self, int confl) except -1:
        """Fill ``self.learnt`` and return the backjump level."""
        cdef int current = self.trail_lim.size
        cdef int path_count = 0
        cdef int p = -1
        cdef int idx = self.trail.size - 1
        cdef int ci = confl
        cdef int k, q, var, start, size, best, tmp
        cdef int* c
        self.learnt.size = 0
        ivec_push(&self.learnt, 0)
        while True:
            start = self.cstart.data[ci]
            size = self.csize.data[ci]
            c = &self.lits.data[start]
            for k in range(0 if p == -1 else 1, size):
                q = c[k]
                var = q >> 1
                if not self.seen[var] and self.level[var] > 0:
                    self._bump(var)
                    self.seen[var] = 1
                    if self.level[var] >= current:
                        path_count += 1
                    else:
                        ivec_push(&self.learnt, q)
            while not self.seen[self.trail.data[idx] >> 1]:
                idx -= 1
            p = self.trail.data[idx]
            idx -= 1
            ci = self.reason[p >> 1]
            self.seen[p >> 1] = 0
            path_count -= 1
            if path_count == 0:
                break
        self.learnt.data[0] = p ^ 1
        for k in range(1, self.learnt.size):
            self.seen[self.learnt.data[k] >> 1] = 0
        if self.learnt.size == 1:
            return 0
        best = 1
        for k in range(2, self.learnt.size):
            if self.level[self.learnt.data[k] >> 1] > self.level[self.learnt.data[best] >> 1]:
                best = k
        tmp = self.learnt.data[1]
        self.learnt.data[1] = self.learnt.data[best]
        self.learnt.data[best] = tmp
        return self.level[self.learnt.data[1] >> 1]

    cdef void _backtrack(self, int target):
        cdef int stop, k, var
        if self.trail_lim.size <= target:
            return
        stop = self.trail_lim.data[target]
        for k in range(self.trail.size - 1, stop - 1, -1):
            var = self.trail.data[k] >> 1
            self.vals[var] = 0
            self.reason[var] = -1
        self.trail.size = stop
        self.trail_lim.size = target
        self.qhead = stop

    cdef int _pick_branch(self):
        cdef int best = 0
        cdef double best_act = -1.0
        cdef int v
        for v in range(1, self.nvars + 1):
            if self.vals[v] == 0 and self.activity[v] > best_act:
                best = v
                best_act = self.activity[v]
        return best

    cdef int _add_learnt(self) except -1:
        cdef int ci = self.cstart.size
        cdef int k
        ivec_push(&self.cstart, self.lits.size)
        ivec_push(&self.csize, self.learnt.size)
        for k in range(self.learnt.size):
            ivec_push(&self.lits, self.learnt.data[k])
        ivec_push(&self.watches[self.learnt.data[0]], ci)
        ivec_push(&self.watches[self.learnt.data[1]], ci)
        return ci

    def solve(self, assumptions=(), long long conflict_limit=-1, double deadline=0.0):
        """Return SAT, UNSAT or UNKNOWN (budget exhausted)."""
        cdef int confl, bt, ci, nxt, var, val, p, na, v
        cdef long long conflicts_here = 0
        cdef long long since_restart = 0
        cdef long long restart_at
        cdef int restart_no = 0
        cdef IVec assumps
        self.model = []
        if not self.ok:
            return UNSAT
        memset(&assumps, 0, sizeof(IVec))
        try:
            for lit in assumptions:
                var = lit if lit > 0 else -lit
                if var == 0 or var > self.nvars:
                    raise ValueError(f"assumption {lit} out of range 1..{self.nvars}")
                ivec_push(&assumps, 2 * var if lit > 0 else 2 * var + 1)
            na = assumps.size
            self._backtrack(0)
            restart_at = luby(2, restart_no) * self.restart_base
            while True:
                confl = self._propagate()
                if confl != -1:
                    self.conflicts += 1
                    conflicts_here += 1
                    since_restart += 1
                    if self.trail_lim.size == 0:
                        self.ok = False
                        return UNSAT
                    bt = self._analyze(confl)
                    self._backtrack(bt)
                    if self.learnt.size == 1:
                        self._enqueue(self.learnt.data[0], -1)
                    else:
                        ci = self._add_learnt()
                        self._enqueue(self.learnt.data[0], ci)
                    self.var_inc /= self.var_decay
                    if 0 <= conflict_limit <= conflicts_here:
                        self._backtrack(0)
                        return UNKNOWN
                    if deadline and conflicts_here % 64 == 0 and time.monotonic() > deadline:
                        self._backtrack(0)
                        return UNKNOWN
                    continue
                if since_restart >= restart_at:
                    since_restart = 0
                    restart_no += 1
                    restart_at = luby(2, restart_no) * self.restart_base
                    self._backtrack(0)
                    continue
                nxt = -1
                while self.trail_lim.size < na:
                    p = assumps.data[self.trail_lim.size]
                    val = self._value(p)
                    if val == 1:
                        ivec_push(&self.trail_lim, self.trail.size)
                    elif val == -1:
                        self._backtrack(0)
                        return UNSAT
                    else:
                        nxt = p
                        break
                if nxt == -1:
                    var = self._pick_branch()
                    if var == 0:
                        self.model = [self.vals[v] == 1 for v in range(1, self.nvars + 1)]
                        self._backtrack(0)
                        return SAT
                    self.decisions += 1
                    if deadline and self.decisions % 1024 == 0 and time.monotonic() > deadline:
                        self._backtrack(0)
                        return UNKNOWN
                    nxt = 2 * var + 1
                ivec_push(&self.trail_lim, self.trail.size)
                self._enqueue(nxt, -1)
        finally:
            ivec_free(&assumps)
