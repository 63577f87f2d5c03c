"""Black-, grey- and clear-box coupling of the base and theory solvers."""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .base import BaseSolver, BudgetExceeded
from .program import CandidateModel, Program, Rule, extend_with_choices
from .theory import TheoryTimeout, minimize_core, solve_literals


class Schema(Enum):
    BLACK = "black"
    GREY = "grey"
    CLEAR = "clear"


class Blocking(Enum):
    FULL_MODEL = "model"
    THEORY_ONLY = "theory"


BASE_COUNTERS = ("decisions", "propagations", "conflicts", "restarts",
                 "learned_count", "callback_calls", "loop_formulas")


@dataclass
class RunStats:
    candidates: int = 0
    theory_calls: int = 0
    theory_conflicts: int = 0
    base_instantiations: int = 0
    final_rejections: int = 0
    wall_ms: float = 0.0
    base: dict = field(default_factory=lambda: dict.fromkeys(BASE_COUNTERS, 0))
    learned_trace: list = field(default_factory=list)

    def absorb(self, solver: BaseSolver, prev: Optional[dict] = None) -> None:
        """Add a handle's counters (minus ``prev``, its counters already absorbed)."""
        now = solver.stats.as_dict()
        for k in BASE_COUNTERS:
            self.base[k] += now[k] - (prev[k] if prev else 0)

    def as_dict(self) -> dict:
        out = {k: getattr(self, k) for k in ("candidates", "theory_calls", "theory_conflicts",
                                             "base_instantiations", "final_rejections")}
        out.update(self.base)
        out["wall_ms"] = round(self.wall_ms, 3)
        return out


@dataclass
class CaspResult:
    status: str  # "sat", "unsat" or "timeout"
    model: Optional[CandidateModel] = None
    witness: Optional[dict] = None
    stats: RunStats = field(default_factory=RunStats)

    @property
    def sat(self) -> bool:
        return self.status == "sat"


@dataclass(frozen=True)
class CaspSolution:
    model: CandidateModel
    witness: dict


@dataclass
class Enumeration:
    solutions: list
    complete: bool
    stats: RunStats


class _Run:
    """Shared bookkeeping for one solve call."""

    def __init__(self, program: Program, timeout_s, minimize):
        self.program = program
        self.pc = extend_with_choices(program)
        self.start = time.monotonic()
        self.deadline = None if timeout_s is None else self.start + timeout_s
        self.minimize = minimize
        self.stats = RunStats()

    def check_deadline(self):
        if self.deadline is not None and time.monotonic() >= self.deadline:
            raise BudgetExceeded("deadline reached")

    def theory(self, lits):
        """Check constraint literals; empty sets are vacuously satisfiable and not counted."""
        if not lits:
            return True, {d.name: d.lo for d in self.program.decls}, ()
        self.check_deadline()
        self.stats.theory_calls += 1
        lits = list(lits)
        try:
            v = solve_literals(lits, self.program.gamma, self.program.decls, self.deadline)
        except TheoryTimeout:
            raise BudgetExceeded("deadline reached during theory check") from None
        if v.sat:
            return True, v.witness, ()
        self.stats.theory_conflicts += 1
        core = [lits[i] for i in v.core]
        if self.minimize:
            try:
                core = minimize_core(core, self.program.gamma, self.program.decls, self.deadline)
            except TheoryTimeout:
                raise BudgetExceeded("deadline reached during core minimization") from None
        return False, None, core

    def finish(self, status, model=None, witness=None) -> CaspResult:
        self.stats.wall_ms = (time.monotonic() - self.start) * 1000.0
        return CaspResult(status, model, witness, self.stats)


def blocking_rule(model: CandidateModel, mode: Blocking, core=None) -> Rule:
    """Falsum rule excluding the candidate, or in theory mode the conflict behind it.

    ``core`` is a subset of the candidate's constraint literals that the theory
    solver found unsatisfiable; without one the whole constraint part is blocked.
    """
    if mode is Blocking.FULL_MODEL:
        lits = model.literals()
    elif core is not None:
        lits = core
    else:
        lits = model.constraint_literals
    pos = tuple(a for a, v in lits if v)
    neg = tuple(a for a, v in lits if not v)
    return Rule(None, pos, neg, ())


def solve_black(program: Program, blocking: Blocking = Blocking.THEORY_ONLY,
                timeout_s: Optional[float] = None, minimize: bool = False,
                seed: int = 0) -> CaspResult:
    """Lazy integration: a fresh base solver for every candidate."""
    run = _Run(program, timeout_s, minimize)
    blocks: list[Rule] = []
    try:
        template = BaseSolver(run.pc, seed=seed)
        while True:
            run.check_deadline()
            # a fresh handle on the program plus every blocking rule so far
            solver = template.fresh_copy()
            solver.add_falsum_rules(blocks)
            run.stats.base_instantiations += 1
            try:
                model = solver.solve(run.deadline)
            finally:
                run.stats.absorb(solver)
            if model is None:
                return run.finish("unsat")
            run.stats.candidates += 1
            ok, witness, core = run.theory(model.constraint_literals)
            if ok:
                return run.finish("sat", model, witness)
            blocks.append(blocking_rule(model, blocking, core))
    except BudgetExceeded:
        return run.finish("timeout")


def solve_grey(program: Program, blocking: Blocking = Blocking.THEORY_ONLY,
               timeout_s: Optional[float] = None, minimize: bool = False,
               seed: int = 0) -> CaspResult:
    """Lazy+ integration: one incremental base solver fed with blocking rules."""
    run = _Run(program, timeout_s, minimize)
    try:
        run.check_deadline()
        solver = BaseSolver(run.pc, seed=seed)
        run.stats.base_instantiations = 1
        while True:
            try:
                model = solver.solve(run.deadline)
            finally:
                run.stats.base = dict.fromkeys(BASE_COUNTERS, 0)
                run.stats.absorb(solver)
                run.stats.learned_trace.append(solver.stats.learned_count)
            if model is None:
                return run.finish("unsat")
            run.stats.candidates += 1
            ok, witness, core = run.theory(model.constraint_literals)
            if ok:
                return run.finish("sat", model, witness)
            solver.add_falsum_rules([blocking_rule(model, blocking, core)])
    except BudgetExceeded:
        return run.finish("timeout")


def _clear_callback(run: _Run):
    def check(new, current):
        ok, _w, core = run.theory(current)
        return None if ok else core
    return check


def solve_clear(program: Program, timeout_s: Optional[float] = None,
                minimize: bool = False, seed: int = 0) -> CaspResult:
    """Online integration: theory checks on every partial assignment fixpoint."""
    run = _Run(program, timeout_s, minimize)
    try:
        run.check_deadline()
        solver = BaseSolver(run.pc, seed=seed)
        run.stats.base_instantiations = 1
        solver.set_callback(_clear_callback(run))
        try:
            model = solver.solve(run.deadline)
        finally:
            run.stats.absorb(solver)
        if model is None:
            return run.finish("unsat")
        run.stats.candidates += 1
        ok, witness, _core = run.theory(model.constraint_literals)
        if not ok:
            run.stats.final_rejections += 1
            raise AssertionError("clear-box candidate failed its final theory check")
        return run.finish("sat", model, witness)
    except BudgetExceeded:
        return run.finish("timeout")


def solve(program: Program, schema: Schema, blocking: Blocking = Blocking.THEORY_ONLY,
          timeout_s: Optional[float] = None, minimize: bool = False, seed: int = 0) -> CaspResult:
    schema = Schema(schema)
    if schema is Schema.BLACK:
        return solve_black(program, Blocking(blocking), timeout_s, minimize, seed)
    if schema is Schema.GREY:
        return solve_grey(program, Blocking(blocking), timeout_s, minimize, seed)
    return solve_clear(program, timeout_s, minimize, seed)


def enumerate_all(program: Program, schema: Schema, timeout_s: Optional[float] = None,
                  minimize: bool = False, seed: int = 0) -> Enumeration:
    """Every answer set of ``program``, found under the given schema with full-model blocking."""
    schema = Schema(schema)
    run = _Run(program, timeout_s, minimize)
    found: list[CaspSolution] = []
    blocks: list[Rule] = []
    solver = None
    complete = False
    try:
        if schema is Schema.BLACK:
            template = BaseSolver(run.pc, seed=seed)
        else:
            solver = BaseSolver(run.pc, seed=seed)
            run.stats.base_instantiations = 1
            if schema is Schema.CLEAR:
                solver.set_callback(_clear_callback(run))
        while True:
            run.check_deadline()
            if schema is Schema.BLACK:
                solver = template.fresh_copy()
                solver.add_falsum_rules(blocks)
                run.stats.base_instantiations += 1
                prev = None
            else:
                prev = solver.stats.as_dict()
            try:
                model = solver.solve(run.deadline)
            finally:
                run.stats.absorb(solver, prev)
            if model is None:
                complete = True
                break
            run.stats.candidates += 1
            ok, witness, _core = run.theory(model.constraint_literals)
            if ok:
                found.append(CaspSolution(model, witness))
            elif schema is Schema.CLEAR:
                run.stats.final_rejections += 1
                raise AssertionError("clear-box candidate failed its final theory check")
            rule = blocking_rule(model, Blocking.FULL_MODEL)
            if schema is Schema.BLACK:
                blocks.append(rule)
            else:
                solver.add_falsum_rules([rule])
    except BudgetExceeded:
        pass
    run.stats.wall_ms = (time.monotonic() - run.start) * 1000.0
    found.sort(key=lambda s: s.model.values)
    return Enumeration(found, complete, run.stats)
