"""Pure Python CDCL core.

Two-watched-literal propagation, first-UIP learning, VSIDS-style activity
with lowest-index tie breaking, Luby restarts and negative default phase.
The compiled core in ``_cdcl.pyx`` implements the same search step for
step, so both backends return the same model on the same input.

Literals are external signed integers (``v`` / ``-v``). Internally a
literal is ``2*v`` (positive) or ``2*v + 1`` (negative).
"""
import time

SAT = 10
UNSAT = 20
UNKNOWN = 0

_RESCALE_LIMIT = 1e100


def luby(y, x):
    """x-th element (0-based) of the Luby sequence scaled by ``y``."""
    size, seq = 1, 0
    while size < x + 1:
        seq += 1
        size = 2 * size + 1
    while size - 1 != x:
        size = (size - 1) >> 1
        seq -= 1
        x = x % size
    return y ** seq


class Solver:
    """Incremental CDCL solver with an assumptions interface."""

    backend = "python"

    def __init__(self, num_vars=0):
        self.nvars = 0
        self.ok = True
        self.clauses = []
        self.num_original = 0
        self.vals = [0]
        self.level = [0]
        self.reason = [-1]
        self.activity = [0.0]
        self.seen = [0]
        self.watches = [[], []]
        self.trail = []
        self.trail_lim = []
        self.qhead = 0
        self.var_inc = 1.0
        self.var_decay = 0.95
        self.restart_base = 100
        self.decisions = 0
        self.propagations = 0
        self.conflicts = 0
        self.model = []
        for _ in range(num_vars):
            self.new_var()

    def new_var(self):
        self.nvars += 1
        self.vals.append(0)
        self.level.append(0)
        self.reason.append(-1)
        self.activity.append(0.0)
        self.seen.append(0)
        self.watches.append([])
        self.watches.append([])
        return self.nvars

    def set_activity(self, var, value):
        self.activity[var] = value

    def _value(self, lit):
        v = self.vals[lit >> 1]
        return -v if lit & 1 else v

    def _enqueue(self, lit, reason):
        var = lit >> 1
        self.vals[var] = -1 if lit & 1 else 1
        self.level[var] = len(self.trail_lim)
        self.reason[var] = reason
        self.trail.append(lit)

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
        ci = len(self.clauses)
        self.clauses.append(clause)
        self.watches[clause[0]].append(ci)
        self.watches[clause[1]].append(ci)
        return True

    def _propagate(self):
        trail = self.trail
        vals = self.vals
        clauses = self.clauses
        watches = self.watches
        while self.qhead < len(trail):
            p = trail[self.qhead]
            self.qhead += 1
            self.propagations += 1
            false_lit = p ^ 1
            ws = watches[false_lit]
            i = j = 0
            n = len(ws)
            while i < n:
                ci = ws[i]
                i += 1
                c = clauses[ci]
                if c[0] == false_lit:
                    c[0] = c[1]
                    c[1] = false_lit
                first = c[0]
                fv = vals[first >> 1]
                if first & 1:
                    fv = -fv
                if fv == 1:
                    ws[j] = ci
                    j += 1
                    continue
                found = False
                for k in range(2, len(c)):
                    lk = c[k]
                    kv = vals[lk >> 1]
                    if lk & 1:
                        kv = -kv
                    if kv != -1:
                        c[1] = lk
                        c[k] = false_lit
                        watches[lk].append(ci)
                        found = True
                        break
                if found:
                    continue
                ws[j] = ci
                j += 1
                if fv == -1:
                    while i < n:
                        ws[j] = ws[i]
                        j += 1
                        i += 1
                    del ws[j:]
                    self.qhead = len(trail)
                    return ci
                self._enqueue(first, ci)
            del ws[j:]
        return -1

    def _bump(self, var):
        act = self.activity[var] + self.var_inc
        self.activity[var] = act
        if act > _RESCALE_LIMIT:
            for v in range(1, self.nvars + 1):
                self.activity[v] *= 1e-100
            self.var_inc *= 1e-100

    def _analyze(self, confl):
        seen = self.seen
        level = self.level
        trail = self.trail
        current = len(self.trail_lim)
        learnt = [0]
        path_count = 0
        p = -1
        idx = len(trail) - 1
        ci = confl
        while True:
            c = self.clauses[ci]
            start = 0 if p == -1 else 1
            for k in range(start, len(c)):
                q = c[k]
                var = q >> 1
                if not seen[var] and level[var] > 0:
                    self._bump(var)
                    seen[var] = 1
                    if level[var] >= current:
                        path_count += 1
                    else:
                        learnt.append(q)
            while not seen[trail[idx] >> 1]:
                idx -= 1
            p = trail[idx]
            idx -= 1
            ci = self.reason[p >> 1]
            seen[p >> 1] = 0
            path_count -= 1
            if path_count == 0:
                break
        learnt[0] = p ^ 1
        for k in range(1, len(learnt)):
            seen[learnt[k] >> 1] = 0
        if len(learnt) == 1:
            return learnt, 0
        best = 1
        for k in range(2, len(learnt)):
            if level[learnt[k] >> 1] > level[learnt[best] >> 1]:
                best = k
        learnt[1], learnt[best] = learnt[best], learnt[1]
        return learnt, level[learnt[1] >> 1]

    def _backtrack(self, target):
        if len(self.trail_lim) <= target:
            return
        stop = self.trail_lim[target]
        for k in range(len(self.trail) - 1, stop - 1, -1):
            var = self.trail[k] >> 1
            self.vals[var] = 0
            self.reason[var] = -1
        del self.trail[stop:]
        del self.trail_lim[target:]
        self.qhead = len(self.trail)

    def _pick_branch(self):
        best = 0
        best_act = -1.0
        vals = self.vals
        act = self.activity
        for v in range(1, self.nvars + 1):
            if vals[v] == 0 and act[v] > best_act:
                best = v
                best_act = act[v]
        return best

    def solve(self, assumptions=(), conflict_limit=-1, deadline=0.0):
        """Return SAT, UNSAT or UNKNOWN (budget exhausted).

        ``conflict_limit`` < 0 means unlimited; ``deadline`` is a
        ``time.monotonic()`` instant, 0 for none.
        """
        self.model = []
        if not self.ok:
            return UNSAT
        assumps = []
        for lit in assumptions:
            var = lit if lit > 0 else -lit
            if var == 0 or var > self.nvars:
                raise ValueError(f"assumption {lit} out of range 1..{self.nvars}")
            assumps.append(2 * var if lit > 0 else 2 * var + 1)
        self._backtrack(0)
        conflicts_here = 0
        restart_no = 0
        restart_at = luby(2, restart_no) * self.restart_base
        since_restart = 0
        while True:
            confl = self._propagate()
            if confl != -1:
                self.conflicts += 1
                conflicts_here += 1
                since_restart += 1
                if not self.trail_lim:
                    self.ok = False
                    return UNSAT
                learnt, bt = self._analyze(confl)
                self._backtrack(bt)
                if len(learnt) == 1:
                    self._enqueue(learnt[0], -1)
                else:
                    ci = len(self.clauses)
                    self.clauses.append(learnt)
                    self.watches[learnt[0]].append(ci)
                    self.watches[learnt[1]].append(ci)
                    self._enqueue(learnt[0], ci)
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
            while len(self.trail_lim) < len(assumps):
                p = assumps[len(self.trail_lim)]
                val = self._value(p)
                if val == 1:
                    self.trail_lim.append(len(self.trail))
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
            self.trail_lim.append(len(self.trail))
            self._enqueue(nxt, -1)
