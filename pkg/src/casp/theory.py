"""Finite-domain linear constraints over bounded integer variables.

Constraint atoms of a program map to :class:`ConstraintExpr` values; a set of
them is decided by :func:`solve_constraints` with bounds propagation and a
depth-first search over variable values.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Mapping, Optional, Sequence

INT64_MAX = 2**63 - 1

# surface syntax of each relation
REL_SYMBOLS = {"<": "#<", "<=": "#<=", ">": "#>", ">=": "#>=", "=": "#=", "!=": "#!="}
COMPLEMENT = {"<": ">=", ">=": "<", "<=": ">", ">": "<=", "=": "!=", "!=": "="}


class TheoryTimeout(Exception):
    pass


@dataclass(frozen=True)
class VarDecl:
    name: str
    lo: int
    hi: int

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"empty domain for {self.name}: {self.lo}..{self.hi}")


@dataclass(frozen=True)
class LinExpr:
    """Sum of terms in source order; a term is (coef, var) or (const, None)."""

    terms: tuple = ()

    def variables(self) -> set[str]:
        return {v for _, v in self.terms if v is not None}

    def collect(self) -> tuple[dict[str, int], int]:
        coefs: dict[str, int] = {}
        const = 0
        for c, v in self.terms:
            if v is None:
                const += c
            else:
                coefs[v] = coefs.get(v, 0) + c
        return coefs, const

    def value(self, ev: Mapping[str, int]) -> int:
        return sum(c if v is None else c * ev[v] for c, v in self.terms)

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        out = []
        for i, (c, v) in enumerate(self.terms):
            sign = "-" if c < 0 else "+"
            mag = abs(c)
            if v is None:
                body = str(mag)
            elif mag == 1:
                body = v
            else:
                body = f"{mag}*{v}"
            if i == 0:
                out.append(("-" if c < 0 else "") + body)
            else:
                out.append(f" {sign} {body}")
        return "".join(out)


def lin(*terms) -> LinExpr:
    """Build a LinExpr from ints (constants), names, or (coef, name) pairs."""
    out = []
    for t in terms:
        if isinstance(t, int):
            out.append((t, None))
        elif isinstance(t, str):
            out.append((1, t))
        else:
            out.append((t[0], t[1]))
    return LinExpr(tuple(out))


@dataclass(frozen=True)
class ConstraintExpr:
    lhs: LinExpr
    rel: str
    rhs: LinExpr

    def __post_init__(self):
        if self.rel not in COMPLEMENT:
            raise ValueError(f"unknown relation {self.rel!r}")

    def complement(self) -> "ConstraintExpr":
        return ConstraintExpr(self.lhs, COMPLEMENT[self.rel], self.rhs)

    def variables(self) -> set[str]:
        return self.lhs.variables() | self.rhs.variables()

    def holds(self, ev: Mapping[str, int]) -> bool:
        a, b = self.lhs.value(ev), self.rhs.value(ev)
        return {
            "<": a < b, "<=": a <= b, ">": a > b,
            ">=": a >= b, "=": a == b, "!=": a != b,
        }[self.rel]

    def __str__(self) -> str:
        return f"{self.lhs} {REL_SYMBOLS[self.rel]} {self.rhs}"


def gamma(lit: tuple[int, bool], table: Mapping[int, ConstraintExpr]) -> ConstraintExpr:
    """Constraint for a signed constraint atom; the negative literal maps to the complement."""
    atom, positive = lit
    try:
        expr = table[atom]
    except KeyError:
        raise KeyError(f"unknown constraint atom {atom}") from None
    return expr if positive else expr.complement()


def check_overflow(expr: ConstraintExpr, domains: Mapping[str, VarDecl]) -> None:
    """Reject expressions whose in-domain value could leave the signed 64-bit range."""
    bound = 0
    for side in (expr.lhs, expr.rhs):
        for c, v in side.terms:
            if v is None:
                bound += abs(c)
            else:
                d = domains[v]
                bound += abs(c) * max(abs(d.lo), abs(d.hi))
    if bound > INT64_MAX:
        raise OverflowError(f"constraint {expr} may overflow 64-bit arithmetic")


@dataclass
class TheoryVerdict:
    sat: bool
    witness: Optional[dict[str, int]] = None
    core: Optional[tuple] = None  # indices into the input constraint sequence
    nodes: int = 0

    @property
    def status(self) -> str:
        return "sat" if self.sat else "unsat"


# -- normalized form -------------------------------------------------------
# Every constraint becomes (coefs, op, k) meaning sum(coefs[i] * x_i) op k,
# with op in {"<=", "=", "!="} and coefs a tuple of (var_index, coef).


def _normalize(expr: ConstraintExpr, index: Mapping[str, int]):
    named, rel, k = _normal_form(expr)
    return tuple(sorted((index[v], c) for v, c in named)), rel, k


@lru_cache(maxsize=1 << 16)
def _normal_form(expr: ConstraintExpr):
    # cached on the (frozen, hashable) expression: lazy solving and core
    # minimization pass the same constraints over and over
    lc, lk = expr.lhs.collect()
    rc, rk = expr.rhs.collect()
    coefs = dict(lc)
    for v, c in rc.items():
        coefs[v] = coefs.get(v, 0) - c
    k = rk - lk
    rel = expr.rel
    if rel in (">", ">="):
        coefs = {v: -c for v, c in coefs.items()}
        k = -k
        rel = "<" if rel == ">" else "<="
    if rel == "<":
        rel, k = "<=", k - 1
    return tuple((v, c) for v, c in coefs.items() if c != 0), rel, k


class _Infeasible(Exception):
    pass


class _Propagator:
    def __init__(self, cons, nvars):
        # split equalities into two inequalities for bounds reasoning
        self.ineqs = []
        self.neqs = []
        for items, op, k in cons:
            if op == "<=":
                self.ineqs.append((items, k))
            elif op == "=":
                self.ineqs.append((items, k))
                self.ineqs.append((tuple((i, -c) for i, c in items), -k))
            else:
                self.neqs.append((items, k))
        self.watch_ineq = [[] for _ in range(nvars)]
        self.watch_neq = [[] for _ in range(nvars)]
        for ci, (items, _) in enumerate(self.ineqs):
            for i, _c in items:
                self.watch_ineq[i].append(ci)
        for ci, (items, _) in enumerate(self.neqs):
            for i, _c in items:
                self.watch_neq[i].append(ci)

    def propagate(self, lo, hi, changed=None):
        """Tighten bounds in place to a fixpoint; raise _Infeasible on wipe-out."""
        if changed is None:
            queue_i = list(range(len(self.ineqs)))
            queue_n = list(range(len(self.neqs)))
        else:
            queue_i = sorted({ci for v in changed for ci in self.watch_ineq[v]})
            queue_n = sorted({ci for v in changed for ci in self.watch_neq[v]})
        in_qi = set(queue_i)
        in_qn = set(queue_n)
        ineqs, neqs = self.ineqs, self.neqs
        while queue_i or queue_n:
            touched = []
            while queue_i:
                ci = queue_i.pop()
                in_qi.discard(ci)
                items, k = ineqs[ci]
                minsum = 0
                for i, c in items:
                    minsum += c * lo[i] if c > 0 else c * hi[i]
                if minsum > k:
                    raise _Infeasible
                slack = k - minsum
                for i, c in items:
                    if c > 0:
                        # c*x <= slack + c*lo
                        nb = lo[i] + slack // c
                        if nb < hi[i]:
                            hi[i] = nb
                            touched.append(i)
                    else:
                        # c*x <= slack + c*hi  ->  x >= hi - slack/|c|
                        nb = hi[i] - slack // (-c)
                        if nb > lo[i]:
                            lo[i] = nb
                            touched.append(i)
            while queue_n:
                ci = queue_n.pop()
                in_qn.discard(ci)
                items, k = neqs[ci]
                free = None
                rest = 0
                nfree = 0
                for i, c in items:
                    if lo[i] == hi[i]:
                        rest += c * lo[i]
                    else:
                        nfree += 1
                        free = (i, c)
                if nfree == 0:
                    if rest == k:
                        raise _Infeasible
                elif nfree == 1:
                    i, c = free
                    num = k - rest
                    if num % c == 0:
                        v = num // c
                        if v == lo[i]:
                            lo[i] += 1
                        elif v == hi[i]:
                            hi[i] -= 1
                        else:
                            continue
                        touched.append(i)
            for i in touched:
                if lo[i] > hi[i]:
                    raise _Infeasible
                for ci in self.watch_ineq[i]:
                    if ci not in in_qi:
                        in_qi.add(ci)
                        queue_i.append(ci)
                for ci in self.watch_neq[i]:
                    if ci not in in_qn:
                        in_qn.add(ci)
                        queue_n.append(ci)


    def open_vars(self, lo, hi) -> set:
        """Variables of the rows that the current bounds do not yet entail."""
        out = set()
        for items, k in self.ineqs:
            maxsum = 0
            for i, c in items:
                maxsum += c * hi[i] if c > 0 else c * lo[i]
            if maxsum > k:
                out.update(i for i, _c in items)
        for items, k in self.neqs:
            minsum = maxsum = 0
            for i, c in items:
                if c > 0:
                    minsum += c * lo[i]
                    maxsum += c * hi[i]
                else:
                    minsum += c * hi[i]
                    maxsum += c * lo[i]
            if minsum <= k <= maxsum:
                out.update(i for i, _c in items)
        return out


def solve_constraints(
    cs: Sequence[ConstraintExpr],
    decls: Iterable[VarDecl],
    deadline: Optional[float] = None,
) -> TheoryVerdict:
    """Decide a conjunction of linear constraints over declared integer domains.

    The witness assigns every declared variable; variables untouched by ``cs``
    take their lower bound. An unsat verdict carries the whole input as its
    core; ``minimize_core`` shrinks it when a smaller reason is wanted.
    """
    decls = list(decls)
    names = [d.name for d in decls]
    index = {n: i for i, n in enumerate(names)}
    cons = []
    for e in cs:
        try:
            cons.append(_normalize(e, index))
        except KeyError:
            missing = e.variables() - index.keys()
            raise KeyError(f"undeclared variable(s) {sorted(missing)} in {e}") from None
    all_core = tuple(range(len(cs)))

    lo = [d.lo for d in decls]
    hi = [d.hi for d in decls]
    prop = _Propagator(cons, len(decls))
    nodes = 0
    try:
        prop.propagate(lo, hi)
    except _Infeasible:
        return TheoryVerdict(False, core=all_core, nodes=1)

    def search(lo, hi):
        nonlocal nodes
        nodes += 1
        if deadline is not None and nodes % 1024 == 0 and time.monotonic() > deadline:
            raise TheoryTimeout
        # once every row is entailed by the bounds, the lower bounds are a
        # solution; branching on variables of entailed rows only repeats work
        best = None
        best_size = None
        for i in sorted(prop.open_vars(lo, hi)):
            size = hi[i] - lo[i]
            if size and (best is None or size < best_size):
                best, best_size = i, size
        if best is None:
            return lo
        for v in range(lo[best], hi[best] + 1):
            nlo, nhi = lo[:], hi[:]
            nlo[best] = nhi[best] = v
            try:
                prop.propagate(nlo, nhi, (best,))
            except _Infeasible:
                continue
            found = search(nlo, nhi)
            if found is not None:
                return found
        return None

    sol = search(lo, hi)
    if sol is None:
        return TheoryVerdict(False, core=all_core, nodes=nodes)
    witness = {n: sol[i] for i, n in enumerate(names)}
    for e in cs:
        assert e.holds(witness), f"witness violates {e}"
    return TheoryVerdict(True, witness=witness, nodes=nodes)


def solve_literals(lits, table, decls, deadline=None) -> TheoryVerdict:
    """Solve the constraints denoted by signed constraint atoms ``(atom, positive)``."""
    lits = list(lits)
    return solve_constraints([gamma(l, table) for l in lits], decls, deadline)


def minimize_core(lits, table, decls, deadline=None) -> list:
    """Deletion-based reduction of an unsatisfiable literal set to a minimal one.

    Literals are tried for deletion in input order, so when several minimal
    subsets exist the result favours the literals that come last. Runs of
    literals are dropped together while that keeps the set unsatisfiable;
    the result is the same as deleting one literal at a time, with far fewer
    expensive unsatisfiability proofs when most literals are irrelevant.
    """
    core = list(lits)
    verdict = solve_literals(core, table, decls, deadline)
    if verdict.sat:
        raise ValueError("minimize_core needs an unsatisfiable literal set")
    i = 0
    chunk = max(1, len(core) // 2)
    while i < len(core):
        chunk = min(chunk, len(core) - i)
        trial = core[:i] + core[i + chunk:]
        if not solve_literals(trial, table, decls, deadline).sat:
            core = trial
            chunk *= 2
        elif chunk > 1:
            chunk //= 2
        else:
            i += 1
    return core
