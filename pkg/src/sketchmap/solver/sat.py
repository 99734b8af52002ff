"""Conflict-driven clause-learning SAT solver.

Plain CDCL: two watched literals, first-UIP learning, activity-based
branching with exponential decay, Luby restarts, phase saving.  Everything
is deterministic: ties break on variable index and unassigned variables
default to False, so models are reproducible run to run.

Literals are encoded as 2*var for the positive polarity and 2*var+1 for
the negative one (vars count from 0).
"""

from __future__ import annotations


def neg(lit: int) -> int:
    return lit ^ 1


def lit_var(lit: int) -> int:
    return lit >> 1


class SatSolver:
    def __init__(self):
        self.clauses: list[list[int]] = []
        self.watches: list[list[int]] = []  # lit -> clause indexes
        self.assign: list[int] = []         # var -> 0 false, 1 true, -1 free
        self.level: list[int] = []
        self.reason: list[int] = []         # var -> clause index or -1
        self.trail: list[int] = []
        self.trail_lim: list[int] = []
        self.activity: list[float] = []
        self.var_inc = 1.0
        self.saved_phase: list[int] = []
        self.qhead = 0
        self.ok = True

    def new_var(self) -> int:
        v = len(self.assign)
        self.assign.append(-1)
        self.level.append(-1)
        self.reason.append(-1)
        self.activity.append(0.0)
        self.saved_phase.append(0)
        self.watches.append([])
        self.watches.append([])
        return v

    def ensure_var(self, v: int) -> None:
        while len(self.assign) <= v:
            self.new_var()

    def value(self, lit: int) -> int:
        """1 true, 0 false, -1 unassigned."""
        a = self.assign[lit >> 1]
        if a < 0:
            return -1
        return a ^ (lit & 1)

    def add_clause(self, lits: list[int]) -> bool:
        """Add a clause (top level only).  Returns False if it makes the
        formula trivially unsat."""
        if not self.ok:
            return False
        for lit in lits:
            self.ensure_var(lit >> 1)
        # dedupe; drop clauses with complementary pairs
        seen = set()
        out = []
        for lit in lits:
            if lit in seen:
                continue
            if neg(lit) in seen:
                return True
            v = self.value(lit)
            if v == 1:
                return True
            if v == 0:
                continue
            seen.add(lit)
            out.append(lit)
        if not out:
            self.ok = False
            return False
        if len(out) == 1:
            self._enqueue(out[0], -1)
            conflict = self._propagate()
            if conflict != -1:
                self.ok = False
                return False
            return True
        ci = len(self.clauses)
        self.clauses.append(out)
        self.watches[neg(out[0])].append(ci)
        self.watches[neg(out[1])].append(ci)
        return True

    def _enqueue(self, lit: int, reason_clause: int) -> None:
        v = lit >> 1
        self.assign[v] = 1 - (lit & 1)
        self.level[v] = len(self.trail_lim)
        self.reason[v] = reason_clause
        self.trail.append(lit)

    def _propagate(self) -> int:
        """Unit propagation; returns conflicting clause index or -1."""
        while self.qhead < len(self.trail):
            lit = self.trail[self.qhead]
            self.qhead += 1
            watchlist = self.watches[lit]
            i = 0
            while i < len(watchlist):
                ci = watchlist[i]
                clause = self.clauses[ci]
                # ensure the falsified literal sits at position 1
                if clause[0] == neg(lit):
                    clause[0], clause[1] = clause[1], clause[0]
                first = clause[0]
                if self.value(first) == 1:
                    i += 1
                    continue
                moved = False
                for k in range(2, len(clause)):
                    if self.value(clause[k]) != 0:
                        clause[1], clause[k] = clause[k], clause[1]
                        self.watches[neg(clause[1])].append(ci)
                        watchlist[i] = watchlist[-1]
                        watchlist.pop()
                        moved = True
                        break
                if moved:
                    continue
                if self.value(first) == 0:
                    return ci  # conflict
                self._enqueue(first, ci)
                i += 1
        return -1

    def _bump(self, v: int) -> None:
        self.activity[v] += self.var_inc
        if self.activity[v] > 1e100:
            for u in range(len(self.activity)):
                self.activity[u] *= 1e-100
            self.var_inc *= 1e-100

    def _analyze(self, conflict: int) -> tuple[list[int], int]:
        """First-UIP conflict analysis: returns (learnt clause, backjump
        level); learnt[0] is the asserting literal."""
        learnt = [0]
        seen = [False] * len(self.assign)
        counter = 0
        asserted = -1  # literal whose reason clause is being expanded
        ci = conflict
        idx = len(self.trail) - 1
        cur_level = len(self.trail_lim)
        while True:
            for q in self.clauses[ci]:
                if q == asserted:
                    continue
                v = q >> 1
                if not seen[v] and self.level[v] > 0:
                    seen[v] = True
                    self._bump(v)
                    if self.level[v] >= cur_level:
                        counter += 1
                    else:
                        learnt.append(q)
            while not seen[self.trail[idx] >> 1]:
                idx -= 1
            asserted = self.trail[idx]
            v = asserted >> 1
            seen[v] = False
            counter -= 1
            idx -= 1
            if counter == 0:
                break
            ci = self.reason[v]
        learnt[0] = neg(asserted)
        if len(learnt) == 1:
            return learnt, 0
        # backjump to the second-highest level in the clause
        max_i = 1
        for k in range(2, len(learnt)):
            if self.level[learnt[k] >> 1] > self.level[learnt[max_i] >> 1]:
                max_i = k
        learnt[1], learnt[max_i] = learnt[max_i], learnt[1]
        return learnt, self.level[learnt[1] >> 1]

    def _cancel_until(self, lvl: int) -> None:
        while len(self.trail_lim) > lvl:
            limit = self.trail_lim.pop()
            for k in range(len(self.trail) - 1, limit - 1, -1):
                lit = self.trail[k]
                v = lit >> 1
                self.saved_phase[v] = self.assign[v]
                self.assign[v] = -1
                self.reason[v] = -1
            del self.trail[limit:]
        self.qhead = len(self.trail)

    def _decide(self) -> int:
        best = -1
        best_act = -1.0
        for v in range(len(self.assign)):
            if self.assign[v] < 0 and self.activity[v] > best_act:
                best = v
                best_act = self.activity[v]
        if best < 0:
            return -1
        return 2 * best + (0 if self.saved_phase[best] == 1 else 1)

    def solve(self) -> bool:
        if not self.ok:
            return False
        conflict = self._propagate()
        if conflict != -1:
            self.ok = False
            return False
        conflicts_here = 0
        restart_at = 100
        luby_k = 1
        while True:
            conflict = self._propagate()
            if conflict != -1:
                conflicts_here += 1
                if len(self.trail_lim) == 0:
                    self.ok = False
                    return False
                learnt, back = self._analyze(conflict)
                self._cancel_until(back)
                if len(learnt) == 1:
                    self._enqueue(learnt[0], -1)
                else:
                    ci = len(self.clauses)
                    self.clauses.append(learnt)
                    self.watches[neg(learnt[0])].append(ci)
                    self.watches[neg(learnt[1])].append(ci)
                    self._enqueue(learnt[0], ci)
                self.var_inc *= 1.053
                continue
            if conflicts_here >= restart_at:
                conflicts_here = 0
                luby_k += 1
                restart_at = 100 * _luby(luby_k)
                self._cancel_until(0)
                continue
            lit = self._decide()
            if lit == -1:
                return True
            self.trail_lim.append(len(self.trail))
            self._enqueue(lit, -1)

    def model_value(self, v: int) -> bool:
        a = self.assign[v] if v < len(self.assign) else -1
        return a == 1


def _luby(i: int) -> int:
    while True:
        k = 1
        while (1 << k) - 1 < i:
            k += 1
        if (1 << k) - 1 == i:
            return 1 << (k - 1)
        i = i - (1 << (k - 1)) + 1
