"""Seeded random ground programs with constraint atoms, for oracle comparisons."""
import random

from casp.program import ProgramBuilder
from casp.theory import ConstraintExpr, LinExpr

RELS = ("<", "<=", ">", ">=", "=", "!=")


def random_program(seed: int, max_regular: int = 10, max_constraint: int = 3, width: int = 5):
    rng = random.Random(seed)
    nreg = rng.randint(1, max_regular)
    ncon = rng.randint(0, max_constraint)
    b = ProgramBuilder()
    names = [f"a{i}" for i in range(nreg)]
    variables = ["X", "Y"][: rng.randint(1, 2)]
    for v in variables:
        lo = rng.randint(-2, 2)
        b.declare(v, lo, lo + rng.randint(0, width - 1))
    cexprs = []
    for _ in range(ncon):
        terms = []
        for v in rng.sample(variables, rng.randint(1, len(variables))):
            terms.append((rng.choice((-2, -1, 1, 2)), v))
        rhs = LinExpr(((rng.randint(-3, 6), None),))
        cexprs.append(ConstraintExpr(LinExpr(tuple(terms)), rng.choice(RELS), rhs))
    pool = names + cexprs
    for _ in range(rng.randint(1, 2 * nreg + 2)):
        kind = rng.random()
        if kind < 0.2:
            b.choice(rng.choice(names))
            continue
        head = None if kind < 0.35 else rng.choice(names)
        pos, neg, negneg = [], [], []
        for _ in range(rng.randint(0 if head else 1, 3)):
            x = rng.choice(pool)
            r = rng.random()
            (pos if r < 0.5 else neg if r < 0.85 else negneg).append(x)
        b.rule(head, pos, neg, negneg)
    # make sure every constraint atom occurs somewhere
    for c in cexprs:
        b.rule(rng.choice(names), [c], [], [])
    return b.build()
