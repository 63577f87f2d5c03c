import itertools

import pytest
from hypothesis import given, settings, strategies as st

from casp.theory import (
    COMPLEMENT, ConstraintExpr, LinExpr, VarDecl, _normalize, _Infeasible, _Propagator,
    gamma, lin, minimize_core, solve_constraints, solve_literals,
)

X = [VarDecl("X", 0, 24)]


def c(lhs, rel, rhs):
    return ConstraintExpr(lin(*lhs) if isinstance(lhs, tuple) else lin(lhs), rel,
                          lin(*rhs) if isinstance(rhs, tuple) else lin(rhs))


# -- fixed examples -----------------------------------------------------------

def test_lowest_value_witness():
    v = solve_constraints([c("X", "<", 12)], X)
    assert v.sat and v.witness == {"X": 0}


def test_complementary_pair_is_unsat_with_full_core():
    v = solve_constraints([c("X", "<", 12), c("X", ">=", 12)], X)
    assert not v.sat
    assert v.core == (0, 1)


def test_two_equations_pin_both_variables():
    decls = [VarDecl("A", 0, 10), VarDecl("B", 0, 10)]
    v = solve_constraints([c(("A", "B"), "=", 10), c(("A", (-1, "B")), "=", 4)], decls)
    assert v.sat and v.witness == {"A": 7, "B": 3}


def test_untouched_variables_take_lower_bound():
    v = solve_constraints([], [VarDecl("Z", -3, 5)])
    assert v.sat and v.witness == {"Z": -3}


def test_undeclared_variable_is_rejected():
    with pytest.raises(KeyError):
        solve_constraints([c("Q", "=", 1)], X)


def test_negated_literal_maps_to_complement():
    table = {0: c("X", "<", 12)}
    assert gamma((0, False), table) == c("X", ">=", 12)
    assert gamma((0, True), table) == table[0]
    eq = c("X", "=", "Y")
    assert eq.complement() == c("X", "!=", "Y")
    assert eq.complement().complement() == eq


def test_disequality_needs_search():
    decls = [VarDecl("X", 0, 1), VarDecl("Y", 0, 1), VarDecl("Z", 0, 1)]
    pigeons = [c("X", "!=", "Y"), c("Y", "!=", "Z"), c("X", "!=", "Z")]
    assert not solve_constraints(pigeons, decls).sat


class TestMinimizeCore:
    table = {0: c("X", "<", 12), 1: c("X", ">=", 12), 2: c("Y", "=", 3), 3: c("X", "<", 0)}
    decls = [VarDecl("X", 0, 24), VarDecl("Y", 0, 5)]

    def test_drops_the_irrelevant_literal(self):
        core = minimize_core([(0, True), (1, True), (2, True)], self.table, self.decls)
        assert sorted(core) == [(0, True), (1, True)]

    def test_minimal_pair_is_a_fixpoint(self):
        core = minimize_core([(0, True), (1, True)], self.table, self.decls)
        assert core == [(0, True), (1, True)]

    def test_single_infeasible_literal(self):
        assert minimize_core([(3, True)], self.table, self.decls) == [(3, True)]

    def test_rejects_satisfiable_input(self):
        with pytest.raises(ValueError):
            minimize_core([(0, True)], self.table, self.decls)

    def test_prefers_keeping_later_literals(self):
        table = {0: c("X", ">=", 20), 1: c("X", ">=", 13), 2: c("X", "<", 12)}
        core = minimize_core([(0, True), (1, True), (2, True)], table, [VarDecl("X", 0, 24)])
        assert core == [(1, True), (2, True)]


# -- properties ---------------------------------------------------------------

VARS = ("A", "B", "C", "D")
RELS = sorted(COMPLEMENT)


@st.composite
def constraint_sets(draw):
    nvars = draw(st.integers(1, 4))
    decls = []
    for name in VARS[:nvars]:
        lo = draw(st.integers(-5, 5))
        decls.append(VarDecl(name, lo, lo + draw(st.integers(0, 9))))
    names = [d.name for d in decls]
    cs = []
    for _ in range(draw(st.integers(0, 4))):
        used = draw(st.lists(st.sampled_from(names), min_size=1, max_size=3, unique=True))
        terms = tuple((draw(st.integers(-3, 3).filter(bool)), v) for v in used)
        rhs = LinExpr(((draw(st.integers(-12, 12)), None),))
        cs.append(ConstraintExpr(LinExpr(terms), draw(st.sampled_from(RELS)), rhs))
    return cs, decls


def brute_force(cs, decls):
    names = [d.name for d in decls]
    for values in itertools.product(*(range(d.lo, d.hi + 1) for d in decls)):
        ev = dict(zip(names, values))
        if all(e.holds(ev) for e in cs):
            return True
    return False


@settings(max_examples=300, deadline=None)
@given(constraint_sets())
def test_status_matches_brute_force_and_witness_holds(case):
    cs, decls = case
    v = solve_constraints(cs, decls)
    assert v.sat == brute_force(cs, decls)
    if v.sat:
        assert set(v.witness) == {d.name for d in decls}
        assert all(e.holds(v.witness) for e in cs)
        assert all(d.lo <= v.witness[d.name] <= d.hi for d in decls)
    else:
        assert v.core == tuple(range(len(cs)))


@settings(max_examples=200, deadline=None)
@given(constraint_sets(), st.data())
def test_complement_law(case, data):
    cs, decls = case
    ev = {d.name: data.draw(st.integers(d.lo, d.hi)) for d in decls}
    table = dict(enumerate(cs))
    for i in table:
        assert gamma((i, True), table).holds(ev) != gamma((i, False), table).holds(ev)


@settings(max_examples=300, deadline=None)
@given(constraint_sets())
def test_propagation_keeps_every_supported_value(case):
    cs, decls = case
    index = {d.name: i for i, d in enumerate(decls)}
    names = [d.name for d in decls]
    for e in cs:
        lo = [d.lo for d in decls]
        hi = [d.hi for d in decls]
        support = [set() for _ in decls]
        for values in itertools.product(*(range(d.lo, d.hi + 1) for d in decls)):
            if e.holds(dict(zip(names, values))):
                for i, val in enumerate(values):
                    support[i].add(val)
        try:
            _Propagator([_normalize(e, index)], len(decls)).propagate(lo, hi)
        except _Infeasible:
            assert not any(support)
            continue
        for i, vals in enumerate(support):
            assert all(lo[i] <= val <= hi[i] for val in vals)


@settings(max_examples=100, deadline=None)
@given(constraint_sets())
def test_minimized_core_is_unsat_and_minimal(case):
    cs, decls = case
    table = dict(enumerate(cs))
    lits = [(i, True) for i in table]
    if solve_literals(lits, table, decls).sat:
        return
    core = minimize_core(lits, table, decls)
    assert not solve_literals(core, table, decls).sat
    for i in range(len(core)):
        assert solve_literals(core[:i] + core[i + 1:], table, decls).sat
