from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from casp.integration import (
    Blocking, Schema, blocking_rule, enumerate_all, solve, solve_black, solve_clear, solve_grey,
)
from casp.program import CandidateModel, enumerate_answer_sets_oracle, is_answer_set, parse_program
from casp.theory import minimize_core, solve_literals

from randprog import random_program

LIGHT = parse_program((Path(__file__).parent.parent / "data" / "light_switch.lp").read_text())
SCHEMAS = list(Schema)


def check_profile(schema, res):
    s = res.stats
    if schema is Schema.BLACK:
        assert s.base_instantiations == s.candidates + (res.status == "unsat")
    else:
        assert s.base_instantiations == 1
    if schema is Schema.GREY:
        trace = s.learned_trace
        assert all(a <= b for a, b in zip(trace, trace[1:]))
    if schema is Schema.CLEAR:
        assert s.final_rejections == 0


@pytest.mark.parametrize("schema", SCHEMAS, ids=lambda s: s.value)
def test_light_switch(schema):
    res = solve(LIGHT, schema)
    assert res.sat
    assert res.model.positive == {"switch", "lightOn"}
    assert 12 <= res.witness["X"] <= 24
    assert res.stats.candidates == 1 and res.stats.theory_calls >= 1
    check_profile(schema, res)


def test_light_switch_counts():
    black = solve_black(LIGHT)
    assert (black.stats.candidates, black.stats.theory_calls) == (1, 1)
    assert solve_grey(LIGHT).stats.base_instantiations == 1
    assert solve_clear(LIGHT).stats.base["callback_calls"] >= 1


FORCED_NEGATIVE = parse_program("#var X 0..4.\nok :- X #< 0.\n:- not ok.")


@pytest.mark.parametrize("schema", SCHEMAS, ids=lambda s: s.value)
def test_theory_refutes_the_only_candidate(schema):
    res = solve(FORCED_NEGATIVE, schema)
    assert res.status == "unsat"
    check_profile(schema, res)
    if schema is not Schema.CLEAR:
        assert res.stats.candidates == 1
        assert res.stats.theory_conflicts == 1


def test_black_unsat_accounting():
    res = solve_black(FORCED_NEGATIVE)
    assert res.stats.base_instantiations == 2


def test_no_constraint_atoms_means_no_theory_calls():
    res = solve(parse_program("{a}.\nb :- not a."), Schema.BLACK)
    assert res.sat and res.stats.theory_calls == 0


def test_grey_enumeration_uses_one_handle():
    p = parse_program("#var X 0..3.\n{a}.\n:- not X #>= 0.")
    out = enumerate_all(p, Schema.GREY)
    assert out.complete and len(out.solutions) == 2
    assert out.stats.base_instantiations == 1


@pytest.mark.parametrize("schema", SCHEMAS, ids=lambda s: s.value)
def test_empty_program_has_one_solution(schema):
    out = enumerate_all(parse_program(""), schema)
    assert out.complete and len(out.solutions) == 1


@pytest.mark.parametrize("schema", SCHEMAS, ids=lambda s: s.value)
def test_zero_budget_times_out(schema):
    assert solve(LIGHT, schema, timeout_s=0).status == "timeout"
    assert not enumerate_all(LIGHT, schema, timeout_s=0).complete


class TestBlockingRule:
    model = CandidateModel.from_true(LIGHT, {"switch", "lightOn", "X #< 12"})

    def test_full_model_mentions_every_atom(self):
        rule = blocking_rule(self.model, Blocking.FULL_MODEL)
        assert rule.head is None
        assert len(rule.pos) + len(rule.neg) == len(LIGHT.atoms)

    def test_theory_mode_without_core_blocks_the_constraint_part(self):
        rule = blocking_rule(self.model, Blocking.THEORY_ONLY)
        assert rule.pos == (LIGHT.atom_id("X #< 12"),) and rule.neg == ()

    def test_core_overrides_in_theory_mode(self):
        rule = blocking_rule(self.model, Blocking.THEORY_ONLY, core=[(2, False)])
        assert (rule.pos, rule.neg) == ((), (2,))


def body_holds(rule, model):
    return all(model[a] for a in rule.pos) and not any(model[a] for a in rule.neg)


@settings(max_examples=120, deadline=None)
@given(st.integers(0, 100_000), st.booleans())
def test_theory_blocking_is_sound(seed, minimize):
    """A rejected candidate violates its blocking rule; no answer set does."""
    p = random_program(seed, max_regular=7, max_constraint=3)
    answers = enumerate_answer_sets_oracle(p)
    for cand in enumerate_answer_sets_oracle(p, theory=lambda cs: True):
        lits = cand.constraint_literals
        if not lits or solve_literals(lits, p.gamma, p.decls).sat:
            continue
        core = list(lits)
        if minimize:
            core = minimize_core(lits, p.gamma, p.decls)
        rule = blocking_rule(cand, Blocking.THEORY_ONLY, core)
        assert body_holds(rule, cand)
        assert not any(body_holds(rule, m) for m in answers)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 100_000), st.sampled_from(list(Blocking)), st.booleans())
def test_schemas_agree_and_return_answer_sets(seed, blocking, minimize):
    p = random_program(seed)
    results = {}
    for schema in SCHEMAS:
        res = solve(p, schema, blocking, minimize=minimize, seed=seed % 4)
        check_profile(schema, res)
        if res.sat:
            assert is_answer_set(p, res.model)
            cs = [p.gamma[a] if v else p.gamma[a].complement()
                  for a, v in res.model.constraint_literals]
            assert all(c.holds(res.witness) for c in cs)
        results[schema] = res.status
    assert len(set(results.values())) == 1, results


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 100_000))
def test_enumeration_matches_the_oracle(seed):
    p = random_program(seed, max_regular=8)
    want = sorted(m.values for m in enumerate_answer_sets_oracle(p))
    for schema in SCHEMAS:
        out = enumerate_all(p, schema)
        assert out.complete
        assert sorted(s.model.values for s in out.solutions) == want
        # enumeration always ends on the base solver's final UNSAT
        expected = out.stats.candidates + 1 if schema is Schema.BLACK else 1
        assert out.stats.base_instantiations == expected
