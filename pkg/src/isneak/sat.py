"""Satisfiability backend: an incremental DPLL solver with watched literals.

The enumeration loop elsewhere adds one blocking clause per solution and
re-solves, so the solver keeps its clause database (and watch lists) across
calls while resetting assignment state each time. Decision order and phase
preferences are supplied by the caller, which is what makes enumeration
seeded and reproducible.
"""

from __future__ import annotations

from typing import Optional, Sequence


class SatBackend:
    """Minimal interface a solver must provide for pool enumeration.

    Implementations may differ in search strategy (and therefore in which
    solution comes out first), but never in which assignments are valid.
    """

    def add_clause(self, clause: Sequence[int]) -> None:
        raise NotImplementedError

    def solve(self, order: Sequence[int], phases: Sequence[int]) -> Optional[list[bool]]:
        """Return a satisfying assignment as bools indexed 1..num_vars, or None."""
        raise NotImplementedError


class DpllSolver(SatBackend):
    """Iterative DPLL with two-literal watching and chronological backtracking.

    No clause learning: the target instances (feature-model CNF plus
    full-assignment blocking clauses) are easy, and restarts with fresh
    random decision orders do the diversification work.
    """

    def __init__(self, num_vars: int, clauses: Sequence[Sequence[int]] = ()):
        self.num_vars = num_vars
        self.clauses: list[list[int]] = []
        # watches[code] = clause indices currently watching literal `code`,
        # where code(v) = 2v and code(-v) = 2v+1
        self.watches: list[list[int]] = [[] for _ in range(2 * num_vars + 2)]
        self.units: list[int] = []
        self.assign = [-1] * (num_vars + 1)  # -1 unassigned, 0 false, 1 true
        self.trail: list[int] = []
        for c in clauses:
            self.add_clause(c)

    def add_clause(self, clause: Sequence[int]) -> None:
        lits = list(clause)
        if not lits:
            raise ValueError("empty clause")
        for lit in lits:
            if lit == 0 or abs(lit) > self.num_vars:
                raise ValueError(f"literal {lit} out of range")
        if len(lits) == 1:
            self.units.append(lits[0])
            return
        idx = len(self.clauses)
        self.clauses.append(lits)
        for lit in lits[:2]:
            code = (lit << 1) if lit > 0 else ((-lit) << 1) | 1
            self.watches[code].append(idx)

    def solve(self, order: Sequence[int], phases: Sequence[int]) -> Optional[list[bool]]:
        assign = self.assign
        trail = self.trail
        for v in trail:
            assign[v] = -1
        trail.clear()

        for lit in self.units:
            var, val = (lit, 1) if lit > 0 else (-lit, 0)
            if assign[var] == -1:
                assign[var] = val
                trail.append(var)
            elif assign[var] != val:
                return None

        qhead = 0
        # decision frames: (var, flipped, trail length before, order position)
        decisions: list[tuple[int, bool, int, int]] = []
        order_pos = 0
        n_order = len(order)

        while True:
            conflict = self._propagate(qhead)
            qhead = len(trail)
            if conflict:
                flipped_ok = False
                while decisions:
                    var, flipped, tlen, opos = decisions.pop()
                    old = assign[var]
                    for v in trail[tlen:]:
                        assign[v] = -1
                    del trail[tlen:]
                    order_pos = opos  # vars past this point may be unassigned again
                    if not flipped:
                        assign[var] = 1 - old
                        trail.append(var)
                        decisions.append((var, True, tlen, opos))
                        qhead = tlen
                        flipped_ok = True
                        break
                if not flipped_ok:
                    return None
                continue

            while order_pos < n_order and assign[order[order_pos]] != -1:
                order_pos += 1
            if order_pos == n_order:
                return [bool(assign[v]) for v in range(self.num_vars + 1)]
            var = order[order_pos]
            decisions.append((var, False, len(trail), order_pos))
            assign[var] = phases[var]
            trail.append(var)

    def _propagate(self, qhead: int) -> bool:
        """Run unit propagation from trail position qhead; True on conflict."""
        assign = self.assign
        trail = self.trail
        watches = self.watches
        clauses = self.clauses
        while qhead < len(trail):
            v = trail[qhead]
            qhead += 1
            b = assign[v]
            false_lit = -v if b else v
            false_code = (v << 1) | b
            wl = watches[false_code]
            i = 0
            while i < len(wl):
                ci = wl[i]
                lits = clauses[ci]
                if lits[0] == false_lit:
                    lits[0] = lits[1]
                    lits[1] = false_lit
                other = lits[0]
                oa = assign[other] if other > 0 else assign[-other]
                if oa != -1 and (oa == 1) == (other > 0):
                    i += 1  # clause satisfied by the other watch
                    continue
                moved = False
                for j in range(2, len(lits)):
                    lj = lits[j]
                    av = assign[lj] if lj > 0 else assign[-lj]
                    if av == -1 or (av == 1) == (lj > 0):
                        lits[1] = lj
                        lits[j] = false_lit
                        code = (lj << 1) if lj > 0 else ((-lj) << 1) | 1
                        watches[code].append(ci)
                        wl[i] = wl[-1]
                        wl.pop()
                        moved = True
                        break
                if moved:
                    continue
                if oa == -1:
                    ovar, oval = (other, 1) if other > 0 else (-other, 0)
                    assign[ovar] = oval
                    trail.append(ovar)
                    i += 1
                else:
                    return True  # both watches false
        return False
