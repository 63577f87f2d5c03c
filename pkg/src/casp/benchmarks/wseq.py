"""Weighted sequence: order leaves and color all but the first within a cost bound.

Cost of the leaf at position p with predecessor q, by color:
red = weight(p) + weight(q), green = card(p) + card(q), blue = weight(p) + card(p).
The first leaf costs nothing.
"""
from __future__ import annotations

import random
from dataclasses import dataclass

from ..program import Program, ProgramBuilder
from .common import Encoding, asp_sum_at_most, check_encoding, cx, require, tie

COLORS = ("red", "green", "blue")
MAX_LEAVES = 12


@dataclass(frozen=True)
class WseqInstance:
    leaves: tuple  # (weight, cardinality) pairs
    max_cost: int
    num_colors: int = 3

    def __post_init__(self):
        if len(self.leaves) < 2:
            raise ValueError("weighted sequence needs at least two leaves")
        if any(w < 0 or c < 0 for w, c in self.leaves):
            raise ValueError("weights and cardinalities must be non-negative")
        if self.num_colors != 3:
            raise ValueError("only three colors are supported")

    @property
    def n(self) -> int:
        return len(self.leaves)

    def to_dict(self) -> dict:
        return {"domain": "wseq", "leaves": [list(l) for l in self.leaves],
                "max_cost": self.max_cost, "num_colors": self.num_colors}

    @classmethod
    def from_dict(cls, d: dict) -> "WseqInstance":
        return cls(tuple(tuple(l) for l in d["leaves"]), d["max_cost"], d.get("num_colors", 3))


def step_costs(leaves, cur: int, prev: int) -> dict:
    (w, c), (wq, cq) = leaves[cur], leaves[prev]
    return {"red": w + wq, "green": c + cq, "blue": w + c}


def wseq_optimum(leaves) -> int:
    """Minimum colored-sequence cost, by dynamic programming over leaf subsets."""
    n = len(leaves)
    best = {(1 << i, i): 0 for i in range(n)}
    for mask in range(1, 1 << n):
        for last in range(n):
            cur = best.get((mask, last))
            if cur is None:
                continue
            for nxt in range(n):
                if mask >> nxt & 1:
                    continue
                cost = cur + min(step_costs(leaves, nxt, last).values())
                key = (mask | 1 << nxt, nxt)
                if cost < best.get(key, cost + 1):
                    best[key] = cost
    full = (1 << n) - 1
    return min(best[(full, i)] for i in range(n))


def gen_wseq(n: int, seed: int) -> WseqInstance:
    if not 2 <= n <= MAX_LEAVES:
        raise ValueError(f"wseq size must be in [2, {MAX_LEAVES}], got {n}")
    rng = random.Random(f"wseq-{n}-{seed}")
    leaves = tuple((rng.randint(1, 5 * n), rng.randint(1, 5 * n)) for _ in range(n))
    opt = wseq_optimum(leaves)
    slack = rng.uniform(0.0, 0.2)
    return WseqInstance(leaves, opt + int(opt * slack))


def _placement(b: ProgramBuilder, n: int) -> None:
    for l in range(1, n + 1):
        for p in range(1, n + 1):
            b.choice(f"leafPos({l},{p})")
            b.rule(f"placed({l})", pos=[f"leafPos({l},{p})"])
            b.rule(f"filled({p})", pos=[f"leafPos({l},{p})"])
            for q in range(p + 1, n + 1):
                b.constraint(pos=[f"leafPos({l},{p})", f"leafPos({l},{q})"])
            for k in range(l + 1, n + 1):
                b.constraint(pos=[f"leafPos({l},{p})", f"leafPos({k},{p})"])
        b.constraint(neg=[f"placed({l})"])
    for p in range(1, n + 1):
        b.constraint(neg=[f"filled({p})"])
    for p in range(2, n + 1):
        for i, c in enumerate(COLORS):
            b.choice(f"posColor({p},{c})")
            b.rule(f"colored({p})", pos=[f"posColor({p},{c})"])
            for d in COLORS[i + 1:]:
                b.constraint(pos=[f"posColor({p},{c})", f"posColor({p},{d})"])
        b.constraint(neg=[f"colored({p})"])


def _encode_pure_asp(inst: WseqInstance) -> Program:
    b = ProgramBuilder()
    n, leaves = inst.n, inst.leaves
    _placement(b, n)
    stages = []
    for p in range(2, n + 1):
        values = set()
        for l in range(n):
            for k in range(n):
                if l == k:
                    continue
                for c, v in step_costs(leaves, l, k).items():
                    body = [f"leafPos({l + 1},{p})", f"posColor({p},{c})"]
                    if c != "blue":
                        body.insert(1, f"leafPos({k + 1},{p - 1})")
                    b.rule(f"posCost({p},{v})", pos=body)
                    values.add(v)
        stages.append([(f"posCost({p},{v})", v) for v in sorted(values)])
    asp_sum_at_most(b, "costSum", stages, inst.max_cost)
    return b.build()


def _encode_true_casp(inst: WseqInstance) -> Program:
    b = ProgramBuilder()
    n, leaves = inst.n, inst.leaves
    top = max(max(l) for l in leaves)
    _placement(b, n)
    for p in range(2, n + 1):
        b.declare(f"cost({p})", 0, 2 * top)
    for p in range(2, n + 1):
        # cval(p,v): the step into position p costs v
        values = set()
        for l in range(n):
            here = f"leafPos({l + 1},{p})"
            w, c = leaves[l]
            b.rule(f"cval({p},{w + c})", pos=[here, f"posColor({p},blue)"])
            values.add(w + c)
            for k in range(n):
                if k == l:
                    continue
                costs = step_costs(leaves, l, k)
                before = f"leafPos({k + 1},{p - 1})"
                for color in ("red", "green"):
                    b.rule(f"cval({p},{costs[color]})",
                           pos=[here, before, f"posColor({p},{color})"])
                    values.add(costs[color])
        # Threshold atoms cgeq(p,v) <-> cost(p) >= v pin cost(p) to its value.
        # They are listed strongest first: core minimization then drops the
        # strong bounds and keeps the weakest ones that still overrun the
        # budget, which makes each blocking rule cover many more candidates.
        ordered = sorted(values, reverse=True)
        for v in ordered:
            for w in ordered:
                if w >= v:
                    b.rule(f"cgeq({p},{v})", pos=[f"cval({p},{w})"])
            tie(b, f"cgeq({p},{v})", cx(f"cost({p})", ">=", v))
    require(b, cx([f"cost({p})" for p in range(2, n + 1)], "<=", inst.max_cost))
    return b.build()


def _encode_pure_csp(inst: WseqInstance) -> Program:
    b = ProgramBuilder()
    n, leaves = inst.n, inst.leaves
    top = max(max(l) for l in leaves)
    big = 2 * top
    # position-major declaration order steers the search position by position
    for p in range(1, n + 1):
        for l in range(1, n + 1):
            b.declare(f"leafPos({l},{p})", 0, 1)
        if p >= 2:
            for c in COLORS:
                b.declare(f"posColor({p},{c})", 0, 1)
    for p in range(1, n + 1):
        b.declare(f"weight({p})", 0, top)
        b.declare(f"card({p})", 0, top)
        if p >= 2:
            b.declare(f"cost({p})", 0, big)
    for l in range(1, n + 1):
        require(b, cx([f"leafPos({l},{p})" for p in range(1, n + 1)], "=", 1))
    for p in range(1, n + 1):
        require(b, cx([f"leafPos({l},{p})" for l in range(1, n + 1)], "=", 1))
        require(b, cx(f"weight({p})", "=",
                      [(leaves[l - 1][0], f"leafPos({l},{p})") for l in range(1, n + 1)]))
        require(b, cx(f"card({p})", "=",
                      [(leaves[l - 1][1], f"leafPos({l},{p})") for l in range(1, n + 1)]))
    for p in range(2, n + 1):
        require(b, cx([f"posColor({p},{c})" for c in COLORS], "=", 1))
        terms = {
            "red": [f"weight({p})", f"weight({p - 1})"],
            "green": [f"card({p})", f"card({p - 1})"],
            "blue": [f"weight({p})", f"card({p})"],
        }
        for c in COLORS:
            # cost(p) >= terms - big * (1 - posColor(p,c))
            lhs = [f"cost({p})"] + [(-1, t) for t in terms[c]] + [(-big, f"posColor({p},{c})")]
            require(b, cx(lhs, ">=", -big))
    require(b, cx([f"cost({p})" for p in range(2, n + 1)], "<=", inst.max_cost))
    return b.build()


def encode_wseq(inst: WseqInstance, encoding) -> Program:
    enc = check_encoding("wseq", encoding)
    return {
        Encoding.PURE_ASP: _encode_pure_asp,
        Encoding.TRUE_CASP: _encode_true_casp,
        Encoding.PURE_CSP: _encode_pure_csp,
    }[enc](inst)
