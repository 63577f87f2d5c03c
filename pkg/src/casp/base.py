"""CDCL search over the Clark completion of a choice-extended program.

Completion models are checked for stability once total; an unstable model
yields a loop formula for an unfounded loop and search resumes. The solver
supports three modes of use:

* one-shot: construct, ``solve()`` once;
* incremental: ``add_falsum_rules()`` between solves keeps learned clauses,
  activities and saved phases;
* online: ``set_callback()`` installs a check that runs after every
  propagation fixpoint that fixed a constraint atom, and may answer with a
  conflict reason.

Variables ``1..n`` are the program atoms (atom id + 1); further variables
stand for rule bodies with two or more literals.
"""
from __future__ import annotations

import heapq
import random
import time
from dataclasses import dataclass, fields
from typing import Callable, Iterable, Optional

from .program import AtomKind, CandidateModel, Program, Rule, is_choice_extended

# callback(new_literals, current_literals) -> None (consistent) or a conflict reason;
# literals are (atom_id, value) pairs over constraint atoms
Callback = Callable[[list, list], Optional[Iterable]]

_TRUE_BODY = 0  # marker for an empty rule body
CHECK_INTERVAL = 1024


class BudgetExceeded(Exception):
    pass


@dataclass
class BaseStats:
    decisions: int = 0
    propagations: int = 0
    conflicts: int = 0
    restarts: int = 0
    learned_count: int = 0
    callback_calls: int = 0
    loop_formulas: int = 0
    stability_checks: int = 0

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def luby(i: int) -> int:
    """i-th element (0-based) of the Luby sequence 1,1,2,1,1,2,4,..."""
    size, seq = 1, 0
    while size < i + 1:
        seq += 1
        size = 2 * size + 1
    while size - 1 != i:
        size = (size - 1) >> 1
        seq -= 1
        i = i % size
    return 1 << seq


class BaseSolver:
    def __init__(self, program: Program, seed: int = 0, restart_unit: int = 64):
        if not is_choice_extended(program):
            raise ValueError("base solver needs a choice-extended program (extend_with_choices)")
        self.program = program
        self.stats = BaseStats()
        self.restart_unit = restart_unit
        self.natoms = len(program.atoms)
        self.unsat = False
        self.callback: Optional[Callback] = None

        self._body_vars: dict[frozenset, int] = {}
        self._clauses: list[list[int]] = []
        self._nvars = self.natoms
        bodies = [self._body_lits(r) for r in program.rules]
        self._rule_body = []
        for lits in bodies:
            if lits is None:
                self._rule_body.append(None)
            elif not lits:
                self._rule_body.append(_TRUE_BODY)
            elif len(lits) == 1:
                self._rule_body.append(lits[0])
            else:
                key = frozenset(lits)
                b = self._body_vars.get(key)
                if b is None:
                    self._nvars += 1
                    b = self._body_vars[key] = self._nvars
                self._rule_body.append(b)
        self._init_arrays(seed)
        self._build_completion(bodies)
        self._build_stability_index()

    # -- setup -------------------------------------------------------------

    @staticmethod
    def _body_lits(r: Rule):
        """Solver literals of a rule body, or None if it contains a complementary pair."""
        lits = [a + 1 for a in r.pos] + [-(a + 1) for a in r.neg] + [a + 1 for a in r.negneg]
        s = set(lits)
        if any(-l in s for l in s):
            return None
        return sorted(s, key=lambda l: (abs(l), l))

    def _init_arrays(self, seed: int):
        n = self._nvars
        self._lv = [0] * (2 * n + 1)         # literal value, negative indices wrap
        self._watches = [[] for _ in range(2 * n + 1)]
        self._level = [0] * (n + 1)
        self._reason = [None] * (n + 1)
        self._phase = [False] * (n + 1)
        self._activity = [0.0] * (n + 1)
        if seed:
            rng = random.Random(seed)
            self._activity = [rng.random() * 1e-3 for _ in range(n + 1)]
        self._var_inc = 1.0
        self._heap = [(-self._activity[v], v) for v in range(1, n + 1)]
        heapq.heapify(self._heap)
        self._trail: list[int] = []
        self._trail_lim: list[int] = []
        self._qhead = 0
        self._cb_mark = 0
        self._pending: list[list[int]] = []
        self._is_cvar = [False] * (n + 1)
        for a in self.program.atoms:
            if a.kind is AtomKind.CONSTRAINT:
                self._is_cvar[a.id + 1] = True
        self._luby_index = 0
        self._conflicts_since_restart = 0

    def _build_completion(self, bodies):
        add = self._add_initial
        for key, b in self._body_vars.items():
            for l in key:
                add([-b, l])
            add([b] + [-l for l in key])
        support: dict[int, list] = {}
        for r, body in zip(self.program.rules, self._rule_body):
            if body is None:
                continue
            if r.head is None:
                add([] if body == _TRUE_BODY else [-body])
                continue
            h = r.head + 1
            support.setdefault(h, []).append(body)
            if body != _TRUE_BODY:
                add([-body, h])
        for a in range(self.natoms):
            h = a + 1
            bs = support.get(h, [])
            if _TRUE_BODY in bs:
                add([h])
            else:
                add([-h] + bs)

    def _add_initial(self, lits):
        """Add a clause at level 0 before search; simplifies against level-0 units."""
        s = set(lits)
        if any(-l in s for l in s):
            return
        lv = self._lv
        if any(lv[l] == 1 for l in s):
            return
        lits = [l for l in dict.fromkeys(lits) if lv[l] != -1]
        if not lits:
            self.unsat = True
            return
        if len(lits) == 1:
            self._assign(lits[0], None)
            return
        self._attach(lits)

    def _build_stability_index(self):
        # (head var, pos vars, neg vars, negneg vars, body literal) per usable non-falsum rule
        self._srules = []
        self._rules_of = [[] for _ in range(self.natoms + 1)]
        for r, body in zip(self.program.rules, self._rule_body):
            if r.head is None or body is None:
                continue
            idx = len(self._srules)
            self._srules.append((r.head + 1, tuple(a + 1 for a in r.pos),
                                 tuple(a + 1 for a in r.neg),
                                 tuple(a + 1 for a in r.negneg), body))
            self._rules_of[r.head + 1].append(idx)

    def fresh_copy(self) -> "BaseSolver":
        """Independent solver for the same program, as if newly constructed.

        Only valid before the first ``solve``; it saves re-translating the
        completion when many fresh solvers are needed for one program.
        """
        if self._trail_lim or self.stats.conflicts or self.stats.decisions:
            raise RuntimeError("fresh_copy needs a solver that has not searched yet")
        new = object.__new__(BaseSolver)
        new.__dict__.update(self.__dict__)
        new.stats = BaseStats()
        new.callback = None
        new._clauses = [c[:] for c in self._clauses]
        new._watches = [w[:] for w in self._watches]
        for name in ("_lv", "_level", "_reason", "_phase", "_activity", "_heap",
                     "_trail", "_is_cvar"):
            setattr(new, name, getattr(self, name)[:])
        new._trail_lim = []
        new._pending = []
        return new

    # -- public API ----------------------------------------------------------

    def set_callback(self, cb: Optional[Callback]) -> None:
        self.callback = cb

    def add_falsum_rules(self, rules: Iterable[Rule]) -> None:
        rules = list(rules)
        for r in rules:
            if r.head is not None:
                raise ValueError("add_falsum_rules accepts only rules with falsum heads")
            for a in r.atoms():
                if not 0 <= a < self.natoms:
                    raise ValueError(f"unknown atom id {a}")
        self._backtrack(0)
        for r in rules:
            lits = self._body_lits(r)
            if lits is None:
                continue
            self._add_initial([-l for l in lits])

    def add_clause(self, lits: Iterable[int]) -> None:
        """Add a clause over solver literals (atom id + 1, signed) at level 0."""
        self._backtrack(0)
        self._add_initial(list(lits))

    @property
    def num_vars(self) -> int:
        return self._nvars

    @property
    def num_clauses(self) -> int:
        return len(self._clauses)

    def clauses(self) -> list:
        return [list(c) for c in self._clauses]

    def solve(self, deadline: Optional[float] = None,
              conflict_budget: Optional[int] = None) -> Optional[CandidateModel]:
        """Return a stable completion model, or None if none exists.

        Raises BudgetExceeded when the deadline or conflict budget runs out.
        """
        if deadline is not None and time.monotonic() >= deadline:
            raise BudgetExceeded("deadline reached")
        if self.unsat:
            return None
        self._backtrack(0)
        stats = self.stats
        start_conflicts = stats.conflicts
        while True:
            confl = self._propagate()
            if confl is not None:
                stats.conflicts += 1
                self._conflicts_since_restart += 1
                if stats.conflicts % CHECK_INTERVAL == 0:
                    self._check_budget(deadline, conflict_budget, start_conflicts)
                if not self._trail_lim:
                    self.unsat = True
                    return None
                self._learn_from(confl)
                if self._conflicts_since_restart >= self.restart_unit * luby(self._luby_index):
                    self._luby_index += 1
                    self._conflicts_since_restart = 0
                    stats.restarts += 1
                    self._backtrack(0)
                continue
            if self._pending:
                if not self._add_live(self._pending.pop()):
                    return None
                continue
            if self.callback is not None and self._cb_mark < len(self._trail):
                if not self._run_callback():
                    return None
                if self._qhead < len(self._trail) or self._pending:
                    continue
            v = self._pick_branch()
            if v is None:
                loops = self._stability_failure()
                if loops is None:
                    return self._model()
                stats.loop_formulas += len(loops)
                self._pending.extend(reversed(loops))
                continue
            stats.decisions += 1
            if stats.decisions % CHECK_INTERVAL == 0:
                self._check_budget(deadline, conflict_budget, start_conflicts)
            self._trail_lim.append(len(self._trail))
            self._assign(v if self._phase[v] else -v, None)

    # -- core mechanics --------------------------------------------------------

    def _check_budget(self, deadline, conflict_budget, start_conflicts):
        if deadline is not None and time.monotonic() >= deadline:
            raise BudgetExceeded("deadline reached")
        if conflict_budget is not None and self.stats.conflicts - start_conflicts >= conflict_budget:
            raise BudgetExceeded("conflict budget exhausted")

    def _assign(self, lit: int, reason) -> None:
        v = lit if lit > 0 else -lit
        self._lv[lit] = 1
        self._lv[-lit] = -1
        self._level[v] = len(self._trail_lim)
        self._reason[v] = reason
        self._trail.append(lit)

    def _attach(self, lits: list) -> int:
        ci = len(self._clauses)
        self._clauses.append(lits)
        self._watches[lits[0]].append(ci)
        self._watches[lits[1]].append(ci)
        return ci

    def _propagate(self):
        lv = self._lv
        watches = self._watches
        clauses = self._clauses
        trail = self._trail
        level = self._level
        reason = self._reason
        cur = len(self._trail_lim)
        props = 0
        while self._qhead < len(trail):
            p = trail[self._qhead]
            self._qhead += 1
            props += 1
            fl = -p
            ws = watches[fl]
            keep = []
            i = 0
            n = len(ws)
            while i < n:
                ci = ws[i]
                i += 1
                c = clauses[ci]
                if c[0] == fl:
                    c[0] = c[1]
                    c[1] = fl
                first = c[0]
                if lv[first] == 1:
                    keep.append(ci)
                    continue
                for k in range(2, len(c)):
                    lk = c[k]
                    if lv[lk] != -1:
                        c[1] = lk
                        c[k] = fl
                        watches[lk].append(ci)
                        break
                else:
                    keep.append(ci)
                    if lv[first] == -1:
                        keep.extend(ws[i:])
                        watches[fl] = keep
                        self._qhead = len(trail)
                        self.stats.propagations += props
                        return ci
                    v = first if first > 0 else -first
                    lv[first] = 1
                    lv[-first] = -1
                    level[v] = cur
                    reason[v] = ci
                    trail.append(first)
            watches[fl] = keep
        self.stats.propagations += props
        return None

    def _bump(self, v: int) -> None:
        act = self._activity
        act[v] += self._var_inc
        if act[v] > 1e100:
            for u in range(1, len(act)):
                act[u] *= 1e-100
            self._var_inc *= 1e-100
            self._heap = [(-act[u], u) for u in range(1, len(act)) if self._lv[u] == 0]
            heapq.heapify(self._heap)
        elif self._lv[v] == 0:
            heapq.heappush(self._heap, (-act[v], v))

    def _analyze(self, ci: int):
        """First-UIP learning from a conflicting clause; returns (learnt, backjump level)."""
        clauses, level, reason, trail = self._clauses, self._level, self._reason, self._trail
        cur = len(self._trail_lim)
        seen = set()
        learnt = [0]
        counter = 0
        p = None
        idx = len(trail) - 1
        c = clauses[ci]
        while True:
            for q in c:
                if q == p:
                    continue
                v = q if q > 0 else -q
                if v not in seen and level[v] > 0:
                    seen.add(v)
                    self._bump(v)
                    if level[v] == cur:
                        counter += 1
                    else:
                        learnt.append(q)
            while True:
                p = trail[idx]
                idx -= 1
                if (p if p > 0 else -p) in seen:
                    break
            counter -= 1
            if counter == 0:
                break
            c = clauses[reason[p if p > 0 else -p]]
        learnt[0] = -p
        self._var_inc *= 1.0 / 0.95
        if len(learnt) == 1:
            return learnt, 0
        best = max(range(1, len(learnt)), key=lambda i: level[abs(learnt[i])])
        learnt[1], learnt[best] = learnt[best], learnt[1]
        return learnt, level[abs(learnt[1])]

    def _learn_from(self, ci: int) -> None:
        learnt, bt = self._analyze(ci)
        self._backtrack(bt)
        self.stats.learned_count += 1
        if len(learnt) == 1:
            self._assign(learnt[0], None)
        else:
            self._assign(learnt[0], self._attach(learnt))

    def _backtrack(self, lvl: int) -> None:
        if len(self._trail_lim) <= lvl:
            return
        lim = self._trail_lim[lvl]
        lv, phase, heap, act = self._lv, self._phase, self._heap, self._activity
        for lit in self._trail[lim:]:
            v = lit if lit > 0 else -lit
            phase[v] = lit > 0
            lv[lit] = 0
            lv[-lit] = 0
            heapq.heappush(heap, (-act[v], v))
        del self._trail[lim:]
        del self._trail_lim[lvl:]
        if self._qhead > lim:
            self._qhead = lim
        if self._cb_mark > lim:
            self._cb_mark = lim

    def _pick_branch(self):
        heap, lv, act = self._heap, self._lv, self._activity
        while heap:
            a, v = heapq.heappop(heap)
            if lv[v] == 0 and -a == act[v]:
                return v
        # stale entries may hide unassigned vars after rescaling; fall back to a scan
        for v in range(1, self._nvars + 1):
            if lv[v] == 0:
                return v
        return None

    def _add_live(self, lits) -> bool:
        """Add a clause in the middle of search, restoring watch invariants.

        Returns False if the clause set became unsatisfiable.
        """
        lv, level = self._lv, self._level
        s = set(lits)
        if any(-l in s for l in s):
            return True
        out = []
        for l in dict.fromkeys(lits):
            v = l if l > 0 else -l
            if level[v] == 0 and lv[l] != 0:
                if lv[l] == 1:
                    return True
                continue
            out.append(l)
        if not out:
            self.unsat = True
            return False
        if len(out) == 1:
            self._backtrack(0)
            self._assign(out[0], None)
            return True

        def key(l):
            val = lv[l]
            if val == 1:
                return (0, -level[abs(l)])
            if val == 0:
                return (1, 0)
            return (2, -level[abs(l)])
        out.sort(key=key)
        ci = self._attach(out)
        v0, v1 = lv[out[0]], lv[out[1]]
        if v1 != -1:
            return True
        # one watch is false: the clause is conflicting, unit, or propagates out[0]
        l1 = level[abs(out[1])]
        if v0 == -1:
            l0 = level[abs(out[0])]
            self._backtrack(l0)
            if l1 == l0:
                self.stats.conflicts += 1
                self._learn_from(ci)
                return True
            self._backtrack(l1)
            self._assign(out[0], ci)
            return True
        if v0 == 0 or level[abs(out[0])] > l1:
            self._backtrack(l1)
            self._assign(out[0], ci)
        return True

    def _run_callback(self) -> bool:
        trail = self._trail
        is_c = self._is_cvar
        new = [(abs(l) - 1, l > 0) for l in trail[self._cb_mark:] if is_c[abs(l)]]
        self._cb_mark = len(trail)
        if not new:
            return True
        current = [(abs(l) - 1, l > 0) for l in trail if is_c[abs(l)]]
        self.stats.callback_calls += 1
        reason = self.callback(new, current)
        if reason is None:
            return True
        reason = list(reason)
        assigned = set(current)
        clause = []
        for atom, val in reason:
            if (atom, val) not in assigned:
                raise RuntimeError(f"callback reason literal {(atom, val)} is not assigned")
            clause.append(-(atom + 1) if val else atom + 1)
        if not clause:
            self.unsat = True
            return False
        return self._add_live(clause)

    # -- stability -----------------------------------------------------------

    def _stability_failure(self):
        """None if the total assignment is stable, else loop-formula clauses."""
        self.stats.stability_checks += 1
        lv = self._lv
        srules = self._srules
        # reduct rules that can fire inside M
        n = self.natoms
        waiting = [[] for _ in range(n + 1)]
        missing = []
        lm = [False] * (n + 1)
        queue = []
        for ri, (h, pos, neg, nn, _b) in enumerate(srules):
            ok = (lv[h] == 1 and all(lv[a] == 1 for a in pos)
                  and all(lv[a] == -1 for a in neg) and all(lv[a] == 1 for a in nn))
            missing.append(len(pos) if ok else -1)
            if not ok:
                continue
            if not pos:
                if not lm[h]:
                    lm[h] = True
                    queue.append(h)
            else:
                for a in pos:
                    waiting[a].append(ri)
        while queue:
            a = queue.pop()
            for ri in waiting[a]:
                missing[ri] -= 1
                if missing[ri] == 0:
                    h = srules[ri][0]
                    if not lm[h]:
                        lm[h] = True
                        queue.append(h)
        unfounded = [v for v in range(1, n + 1) if lv[v] == 1 and not lm[v]]
        if not unfounded:
            return None
        loop = self._smallest_sink_scc(set(unfounded))
        ext = []
        for v in loop:
            for ri in self._rules_of[v]:
                h, pos, neg, nn, b = srules[ri]
                if not any(a in loop for a in pos):
                    ext.append(b)
        ext = list(dict.fromkeys(ext))
        return [[-v] + ext for v in sorted(loop)]

    def _smallest_sink_scc(self, U: set) -> set:
        lv = self._lv
        srules = self._srules
        succ = {}
        for v in U:
            out = set()
            for ri in self._rules_of[v]:
                h, pos, neg, nn, _b = srules[ri]
                if (all(lv[a] == 1 for a in pos) and all(lv[a] == -1 for a in neg)
                        and all(lv[a] == 1 for a in nn)):
                    out.update(a for a in pos if a in U)
            succ[v] = sorted(out)
        comps = _tarjan(sorted(U), succ)
        comp_of = {v: i for i, comp in enumerate(comps) for v in comp}
        sinks = [comp for i, comp in enumerate(comps)
                 if all(comp_of[w] == i for v in comp for w in succ[v])]
        return min(sinks, key=lambda c: (len(c), min(c)))

    def _model(self) -> CandidateModel:
        lv = self._lv
        return CandidateModel(self.program.atoms,
                              tuple(lv[a + 1] == 1 for a in range(self.natoms)))


def _tarjan(nodes, succ) -> list:
    """Strongly connected components (iterative Tarjan)."""
    index = {}
    low = {}
    on_stack = set()
    stack = []
    comps = []
    counter = 0
    for root in nodes:
        if root in index:
            continue
        work = [(root, 0)]
        while work:
            v, i = work.pop()
            if i == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack.add(v)
            recurse = False
            ws = succ[v]
            while i < len(ws):
                w = ws[i]
                i += 1
                if w not in index:
                    work.append((v, i))
                    work.append((w, 0))
                    recurse = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if recurse:
                continue
            if low[v] == index[v]:
                comp = set()
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.add(w)
                    if w == v:
                        break
                comps.append(comp)
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
    return comps
