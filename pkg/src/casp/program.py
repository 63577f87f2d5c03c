"""Ground logic programs with constraint atoms.

Rules have the shape ``head :- pos..., not neg..., not not negneg...`` where
the head is a regular atom or falsum (``None``). Constraint atoms only occur
in bodies and stand for linear constraints kept in ``Program.gamma``.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Mapping, Optional, Sequence

from .theory import (
    REL_SYMBOLS,
    ConstraintExpr,
    LinExpr,
    VarDecl,
    check_overflow,
    gamma,
    solve_constraints,
)

__all__ = [
    "AtomKind", "Atom", "Rule", "VarDecl", "Program", "CandidateModel",
    "ParseError", "ProgramBuilder", "parse_program", "format_program",
    "extend_with_choices", "least_model", "reduct_least_model",
    "is_answer_set", "enumerate_answer_sets_oracle",
]

ORACLE_MAX_ATOMS = 20


class AtomKind(Enum):
    REGULAR = "regular"
    CONSTRAINT = "constraint"


@dataclass(frozen=True)
class Atom:
    id: int
    name: str
    kind: AtomKind


@dataclass(frozen=True)
class Rule:
    head: Optional[int]  # None is falsum
    pos: tuple = ()
    neg: tuple = ()
    negneg: tuple = ()

    @property
    def is_choice(self) -> bool:
        return (self.head is not None and not self.pos and not self.neg
                and self.negneg == (self.head,))

    def atoms(self) -> set[int]:
        out = set(self.pos) | set(self.neg) | set(self.negneg)
        if self.head is not None:
            out.add(self.head)
        return out


@dataclass(frozen=True)
class Program:
    atoms: tuple = ()
    rules: tuple = ()
    decls: tuple = ()
    gamma: Mapping[int, ConstraintExpr] = field(default_factory=dict)

    def __post_init__(self):
        for a in self.atoms:
            if a.kind is AtomKind.CONSTRAINT and a.id not in self.gamma:
                raise ValueError(f"constraint atom {a.name} has no gamma entry")
        for r in self.rules:
            # choice rules over constraint atoms are what extend_with_choices adds
            if (r.head is not None and self.atoms[r.head].kind is AtomKind.CONSTRAINT
                    and not r.is_choice):
                raise ValueError(f"constraint atom {self.atoms[r.head].name} in rule head")

    @property
    def constraint_atoms(self) -> list[int]:
        return [a.id for a in self.atoms if a.kind is AtomKind.CONSTRAINT]

    @property
    def regular_atoms(self) -> list[int]:
        return [a.id for a in self.atoms if a.kind is AtomKind.REGULAR]

    def atom_id(self, name: str) -> int:
        for a in self.atoms:
            if a.name == name:
                return a.id
        raise KeyError(name)

    def with_rules(self, extra: Iterable[Rule]) -> "Program":
        return Program(self.atoms, self.rules + tuple(extra), self.decls, self.gamma)


@dataclass(frozen=True)
class CandidateModel:
    """Complete consistent assignment over the atoms of one program."""

    atoms: tuple
    values: tuple

    def __post_init__(self):
        if len(self.atoms) != len(self.values):
            raise ValueError("incomplete model: every program atom needs a value")

    @classmethod
    def from_true(cls, program: Program, true_names: Iterable[str]) -> "CandidateModel":
        names = set(true_names)
        unknown = names - {a.name for a in program.atoms}
        if unknown:
            raise KeyError(f"unknown atoms {sorted(unknown)}")
        return cls(program.atoms, tuple(a.name in names for a in program.atoms))

    def __getitem__(self, atom_id: int) -> bool:
        return self.values[atom_id]

    @property
    def positive(self) -> frozenset:
        """Names of true atoms (M+)."""
        return frozenset(a.name for a, v in zip(self.atoms, self.values) if v)

    @property
    def positive_ids(self) -> frozenset:
        return frozenset(i for i, v in enumerate(self.values) if v)

    @property
    def constraint_literals(self) -> tuple:
        """Signed constraint atoms (M^C) as ``(atom_id, value)`` pairs."""
        return tuple((a.id, v) for a, v in zip(self.atoms, self.values)
                     if a.kind is AtomKind.CONSTRAINT)

    def literals(self) -> tuple:
        return tuple(zip(range(len(self.values)), self.values))

    def describe(self) -> str:
        parts = []
        for a, v in zip(self.atoms, self.values):
            if a.kind is AtomKind.CONSTRAINT:
                parts.append(a.name if v else f"not ({a.name})")
            elif v:
                parts.append(a.name)
        return "{" + ", ".join(parts) + "}"


# -- building ---------------------------------------------------------------


class ProgramBuilder:
    """Interns atoms to dense ids in order of first appearance (head, pos, neg, negneg)."""

    def __init__(self):
        self._atoms: list[Atom] = []
        self._ids: dict[str, int] = {}
        self._rules: list[Rule] = []
        self._decls: dict[str, VarDecl] = {}
        self._gamma: dict[int, ConstraintExpr] = {}

    def atom(self, name: str) -> int:
        i = self._ids.get(name)
        if i is None:
            i = len(self._atoms)
            self._ids[name] = i
            self._atoms.append(Atom(i, name, AtomKind.REGULAR))
        elif self._atoms[i].kind is AtomKind.CONSTRAINT:
            raise ValueError(f"{name} is a constraint atom")
        return i

    def catom(self, expr: ConstraintExpr) -> int:
        name = str(expr)
        i = self._ids.get(name)
        if i is None:
            i = len(self._atoms)
            self._ids[name] = i
            self._atoms.append(Atom(i, name, AtomKind.CONSTRAINT))
            self._gamma[i] = expr
        return i

    def declare(self, name: str, lo: int, hi: int) -> None:
        if name in self._decls:
            raise ValueError(f"duplicate declaration of variable {name}")
        self._decls[name] = VarDecl(name, lo, hi)

    def _ref(self, x) -> int:
        return self.catom(x) if isinstance(x, ConstraintExpr) else self.atom(x)

    def rule(self, head=None, pos=(), neg=(), negneg=()) -> Rule:
        """Add a rule; body items are atom names or ConstraintExpr values."""
        h = None if head is None else self.atom(head)
        r = Rule(h,
                 tuple(self._ref(x) for x in pos),
                 tuple(self._ref(x) for x in neg),
                 tuple(self._ref(x) for x in negneg))
        self._rules.append(r)
        return r

    def choice(self, name) -> Rule:
        i = self._ref(name)
        r = Rule(i, (), (), (i,))
        self._rules.append(r)
        return r

    def fact(self, name: str) -> Rule:
        return self.rule(name)

    def constraint(self, pos=(), neg=(), negneg=()) -> Rule:
        return self.rule(None, pos, neg, negneg)

    def build(self) -> Program:
        for i, expr in self._gamma.items():
            missing = expr.variables() - self._decls.keys()
            if missing:
                raise ValueError(f"undeclared variable(s) {sorted(missing)} in {expr}")
            check_overflow(expr, self._decls)
        return Program(tuple(self._atoms), tuple(self._rules),
                       tuple(self._decls.values()), dict(self._gamma))


# -- text format -------------------------------------------------------------


class ParseError(ValueError):
    def __init__(self, msg: str, line: int = 0, col: int = 0):
        super().__init__(f"{line}:{col}: {msg}" if line else msg)
        self.line = line
        self.col = col


_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r\n]+|%[^\n]*)
  | (?P<rel>\#<=|\#>=|\#!=|\#<|\#>|\#=)
  | (?P<kw>\#var|\#false)
  | (?P<neck>:-)
  | (?P<dots>\.\.)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*(?:\([A-Za-z0-9_,\- ]*\))?)
  | (?P<int>\d+)
  | (?P<punct>[.,{}+\-*])
""", re.VERBOSE)

_RELS = {sym: rel for rel, sym in REL_SYMBOLS.items()}


def _tokenize(text: str):
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        col = pos - line_start + 1
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        val = m.group()
        if kind == "ws":
            nl = val.count("\n")
            if nl:
                line += nl
                line_start = pos + val.rfind("\n") + 1
        else:
            if kind == "name":
                val = re.sub(r"\s+", "", val)
            yield kind, val, line, col
        pos = m.end()
    yield "eof", "", line, pos - line_start + 1


class _Parser:
    def __init__(self, text: str):
        self.toks = list(_tokenize(text))
        self.i = 0
        self.builder = ProgramBuilder()
        self.var_uses: list[tuple[str, int, int]] = []

    def peek(self, k=0):
        return self.toks[self.i + k]

    def take(self, kind=None, val=None):
        tok = self.toks[self.i]
        if (kind and tok[0] != kind) or (val is not None and tok[1] != val):
            want = val if val is not None else kind
            raise ParseError(f"expected {want}, found {tok[1] or 'end of input'!r}",
                             tok[2], tok[3])
        self.i += 1
        return tok

    def at(self, kind, val=None):
        tok = self.toks[self.i]
        return tok[0] == kind and (val is None or tok[1] == val)

    def parse(self) -> Program:
        while not self.at("eof"):
            self.statement()
        declared = {d.name for d in self.builder._decls.values()}
        for name, line, col in self.var_uses:
            if name not in declared:
                raise ParseError(f"undeclared constraint variable {name}", line, col)
        try:
            return self.builder.build()
        except (ValueError, OverflowError) as e:
            raise ParseError(str(e)) from e

    def statement(self):
        tok = self.peek()
        if self.at("kw", "#var"):
            self.take()
            name = self.take("name")[1]
            lo = self.signed_int()
            self.take("dots")
            hi = self.signed_int()
            self.take("punct", ".")
            try:
                self.builder.declare(name, lo, hi)
            except ValueError as e:
                raise ParseError(str(e), tok[2], tok[3]) from e
            return
        if self.at("punct", "{"):
            self.take()
            name = self.literal_atom()
            self.take("punct", "}")
            self.take("punct", ".")
            self.builder.choice(name)
            return
        head = None
        if self.at("neck"):
            pass
        elif self.at("kw", "#false"):
            self.take()
        else:
            head_lit = self.literal_atom()
            if isinstance(head_lit, ConstraintExpr):
                raise ParseError("constraint atom in head position", tok[2], tok[3])
            head = head_lit
        pos, neg, negneg = [], [], []
        if self.at("neck"):
            self.take()
            while True:
                nots = 0
                while self.at("name", "not") and nots < 2:
                    self.take()
                    nots += 1
                atom = self.literal_atom()
                (pos, neg, negneg)[nots].append(atom)
                if self.at("punct", ","):
                    self.take()
                    continue
                break
        self.take("punct", ".")
        try:
            self.builder.rule(head, pos, neg, negneg)
        except ValueError as e:
            raise ParseError(str(e), tok[2], tok[3]) from e

    def signed_int(self) -> int:
        sign = 1
        if self.at("punct", "-"):
            self.take()
            sign = -1
        return sign * int(self.take("int")[1])

    def literal_atom(self):
        """A plain atom name, or a constraint expression if a relation follows."""
        # look ahead for a relation symbol before the literal ends
        j = self.i
        while True:
            kind, val = self.toks[j][0], self.toks[j][1]
            if kind == "rel":
                break
            if kind in ("eof", "neck") or (kind == "punct" and val in ".,{}"):
                tok = self.take("name")
                if tok[1] == "not":
                    raise ParseError("unexpected 'not'", tok[2], tok[3])
                return tok[1]
            j += 1
        lhs = self.linexp()
        rel = _RELS[self.take("rel")[1]]
        rhs = self.linexp()
        return ConstraintExpr(lhs, rel, rhs)

    def linexp(self) -> LinExpr:
        terms = []
        sign = 1
        if self.at("punct", "-"):
            self.take()
            sign = -1
        while True:
            terms.append(self.term(sign))
            if self.at("punct", "+"):
                self.take()
                sign = 1
            elif self.at("punct", "-"):
                self.take()
                sign = -1
            else:
                return LinExpr(tuple(terms))

    def term(self, sign: int):
        if self.at("int"):
            k = int(self.take()[1])
            if self.at("punct", "*"):
                self.take()
                tok = self.take("name")
                self.var_uses.append((tok[1], tok[2], tok[3]))
                return (sign * k, tok[1])
            return (sign * k, None)
        tok = self.take("name")
        self.var_uses.append((tok[1], tok[2], tok[3]))
        return (sign, tok[1])


def parse_program(text: str) -> Program:
    return _Parser(text).parse()


def format_program(p: Program) -> str:
    """Canonical text; ``parse_program(format_program(p)) == p``."""
    lines = [f"#var {d.name} {d.lo}..{d.hi}." for d in p.decls]
    name = lambda i: p.atoms[i].name  # noqa: E731
    for r in p.rules:
        if r.is_choice:
            lines.append(f"{{{name(r.head)}}}.")
            continue
        body = ([name(a) for a in r.pos] + [f"not {name(a)}" for a in r.neg]
                + [f"not not {name(a)}" for a in r.negneg])
        head = "#false" if r.head is None else name(r.head)
        lines.append(f"{head} :- {', '.join(body)}." if body else f"{head}.")
    return "\n".join(lines) + ("\n" if lines else "")


# -- semantics ---------------------------------------------------------------


def extend_with_choices(p: Program) -> Program:
    """Return the program plus a choice rule for every constraint atom lacking one."""
    have = {r.head for r in p.rules if r.is_choice}
    extra = [Rule(a, (), (), (a,)) for a in p.constraint_atoms if a not in have]
    return p.with_rules(extra) if extra else p


def is_choice_extended(p: Program) -> bool:
    have = {r.head for r in p.rules if r.is_choice}
    return all(a in have for a in p.constraint_atoms)


def least_model(rules: Iterable[tuple], n: int) -> set:
    """Least model of definite rules given as ``(head, body_atoms)``."""
    rules = list(rules)
    waiting: list[list[int]] = [[] for _ in range(n)]
    missing = []
    model: set = set()
    queue = []
    for ri, (h, body) in enumerate(rules):
        body = set(body)
        missing.append(len(body))
        for b in body:
            waiting[b].append(ri)
        if not body and h is not None and h not in model:
            model.add(h)
            queue.append(h)
    while queue:
        a = queue.pop()
        for ri in waiting[a]:
            missing[ri] -= 1
            if missing[ri] == 0:
                h = rules[ri][0]
                if h is not None and h not in model:
                    model.add(h)
                    queue.append(h)
    return model


def reduct_least_model(p: Program, true_ids) -> set:
    """Least model of the reduct of ``p`` relative to the true atoms."""
    true_ids = set(true_ids)
    kept = []
    for r in p.rules:
        if r.head is None:
            continue
        if any(a in true_ids for a in r.neg):
            continue
        if any(a not in true_ids for a in r.negneg):
            continue
        kept.append((r.head, r.pos))
    return least_model(kept, len(p.atoms))


TheoryCheck = Callable[[Sequence[ConstraintExpr]], bool]


def _default_theory(p: Program) -> TheoryCheck:
    return lambda cs: solve_constraints(cs, p.decls).sat


def _body_holds(r: Rule, true_ids) -> bool:
    return (all(a in true_ids for a in r.pos) and all(a not in true_ids for a in r.neg)
            and all(a in true_ids for a in r.negneg))


def is_answer_set(p: Program, m: CandidateModel, theory: Optional[TheoryCheck] = None) -> bool:
    if len(m.values) != len(p.atoms):
        raise ValueError("model must assign every atom of the program")
    pc = extend_with_choices(p)
    true_ids = m.positive_ids
    # falsum rules are constraints on M itself; the reduct drops them
    for r in pc.rules:
        if r.head is None and _body_holds(r, true_ids):
            return False
    if reduct_least_model(pc, true_ids) != set(true_ids):
        return False
    cs = [gamma(lit, p.gamma) for lit in m.constraint_literals]
    if not cs:
        return True
    return (theory or _default_theory(p))(cs)


def enumerate_answer_sets_oracle(p: Program, theory: Optional[TheoryCheck] = None) -> list:
    """All answer sets by exhaustive enumeration of complete literal sets."""
    n = len(p.atoms)
    if n > ORACLE_MAX_ATOMS:
        raise ValueError(f"oracle limited to {ORACLE_MAX_ATOMS} atoms, program has {n}")
    theory = theory or _default_theory(p)
    out = []
    for values in itertools.product((False, True), repeat=n):
        m = CandidateModel(p.atoms, values)
        if is_answer_set(p, m, theory):
            out.append(m)
    return out
