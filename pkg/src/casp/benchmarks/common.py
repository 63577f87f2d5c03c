from __future__ import annotations

import json
from enum import Enum

from ..program import ProgramBuilder
from ..theory import ConstraintExpr, LinExpr


class UnsupportedEncoding(ValueError):
    pass


class Encoding(Enum):
    PURE_ASP = "pure-asp"
    TRUE_CASP = "true-casp"
    PURE_CSP = "pure-csp"

    @classmethod
    def parse(cls, value) -> "Encoding":
        if isinstance(value, cls):
            return value
        return cls(str(value).replace("_", "-").lower())


def supported_encodings(domain: str) -> list:
    if domain == "rf":
        return [Encoding.PURE_ASP, Encoding.TRUE_CASP]
    return list(Encoding)


def check_encoding(domain: str, encoding) -> Encoding:
    enc = Encoding.parse(encoding)
    if enc not in supported_encodings(domain):
        raise UnsupportedEncoding(f"domain {domain} has no {enc.value} encoding")
    return enc


def cx(lhs, rel, rhs) -> ConstraintExpr:
    """Constraint from two term lists; ints are constants, strings are variables."""
    def side(ts):
        if isinstance(ts, (int, str)):
            ts = [ts]
        out = []
        for t in ts:
            if isinstance(t, int):
                out.append((t, None))
            elif isinstance(t, str):
                out.append((1, t))
            else:
                out.append(tuple(t))
        return LinExpr(tuple(out))
    return ConstraintExpr(side(lhs), rel, side(rhs))


def require(b: ProgramBuilder, expr: ConstraintExpr) -> None:
    """The constraint must hold in every answer set."""
    b.constraint(neg=[expr])


def tie(b: ProgramBuilder, atom: str, expr: ConstraintExpr) -> None:
    """The regular atom and the constraint atom have the same truth value."""
    b.constraint(pos=[atom], neg=[expr])
    b.constraint(pos=[expr], neg=[atom])


def exactly_one(b: ProgramBuilder, atoms: list, witness: str) -> None:
    """Choice over ``atoms`` restricted to exactly one true atom."""
    for a in atoms:
        b.choice(a)
        b.rule(witness, pos=[a])
    b.constraint(neg=[witness])
    for i, a in enumerate(atoms):
        for c in atoms[i + 1:]:
            b.constraint(pos=[a, c])


def reachable_sums(value_sets: list, cap: int) -> list:
    """Sets of partial sums (<= cap) after each prefix of ``value_sets``."""
    out = [{0}]
    for vs in value_sets:
        out.append({s + v for s in out[-1] for v in vs if s + v <= cap})
    return out


def instance_to_json(inst) -> str:
    return json.dumps(inst.to_dict(), indent=2, sort_keys=True) + "\n"


def instance_from_json(text: str):
    from .folding import RfInstance
    from .sched import IsInstance
    from .wseq import WseqInstance

    data = json.loads(text)
    domain = data.get("domain")
    cls = {"wseq": WseqInstance, "is": IsInstance, "rf": RfInstance}.get(domain)
    if cls is None:
        raise ValueError(f"unknown domain tag {domain!r}")
    return cls.from_dict(data)


def asp_sum_at_most(b: ProgramBuilder, name: str, stages: list, cap: int) -> None:
    """Pure-ASP bound on a sum: each stage is a list of (atom, value) of which one holds.

    Partial sums ``name(k,s)`` are derived stage by stage; exceeding ``cap`` is a conflict.
    """
    b.fact(f"{name}(0,0)")
    reach = [{0}]
    for k, stage in enumerate(stages, start=1):
        nxt = set()
        for s in sorted(reach[-1]):
            for atom, v in stage:
                if s + v <= cap:
                    b.rule(f"{name}({k},{s + v})", pos=[f"{name}({k - 1},{s})", atom])
                    nxt.add(s + v)
                else:
                    b.constraint(pos=[f"{name}({k - 1},{s})", atom])
        reach.append(nxt)
