"""End-to-end acceptance checks, one test per criterion.

Each test records its verdict in ``VERDICTS``; ``conftest.py`` prints one
PASS/FAIL line per criterion at the end of the session.
"""
import itertools
import json
import random
import time
from contextlib import contextmanager
from pathlib import Path

import pytest

from casp import cli, harness
from casp.integration import Schema, enumerate_all, solve
from casp.program import enumerate_answer_sets_oracle, parse_program
from casp.theory import ConstraintExpr, LinExpr, VarDecl, solve_constraints

from randprog import random_program

ROOT = Path(__file__).parent.parent
MATRIX = ROOT / "scripts" / "matrix.json"
SCHEMAS = list(Schema)
VERDICTS: dict = {}


@contextmanager
def criterion(number: int, label: str):
    VERDICTS[number] = (label, False)
    yield
    VERDICTS[number] = (label, True)


def stats_row(schema, status, stats) -> dict:
    row = stats.as_dict()
    row.update(schema=schema.value, result=status, learned_trace=list(stats.learned_trace))
    return row


def oracle_values(program):
    return sorted(m.values for m in enumerate_answer_sets_oracle(program))


def test_criterion_1_light_switch():
    with criterion(1, "light switch under every schema"):
        p = parse_program((ROOT / "data" / "light_switch.lp").read_text())
        lt12 = p.atom_id("X #< 12")
        start = time.perf_counter()
        for schema in SCHEMAS:
            res = solve(p, schema)
            assert res.status == "sat"
            assert res.model.positive == {"switch", "lightOn"}
            assert not res.model[p.atom_id("am")]
            assert list(res.model.constraint_literals) == [(lt12, False)]
            assert 12 <= res.witness["X"] <= 24
            out = enumerate_all(p, schema)
            assert out.complete and len(out.solutions) == 1
        assert time.perf_counter() - start < 1.0


@pytest.fixture(scope="module")
def random_runs():
    """Enumerate 200 random programs under every schema, once for criteria 2 and 4."""
    start = time.perf_counter()
    runs = []
    for seed in range(200):
        p = random_program(seed, max_regular=10, max_constraint=3, width=5)
        want = oracle_values(p)
        for schema in SCHEMAS:
            out = enumerate_all(p, schema)
            runs.append((seed, schema, want, out))
    return runs, time.perf_counter() - start


def test_criterion_2_random_programs_match_the_oracle(random_runs):
    with criterion(2, "200 random programs enumerate exactly the oracle's answer sets"):
        runs, elapsed = random_runs
        mismatches = [(seed, schema.value) for seed, schema, want, out in runs
                      if not out.complete or sorted(s.model.values for s in out.solutions) != want]
        assert mismatches == []
        assert elapsed < 120


@pytest.fixture(scope="module")
def bench_run(tmp_path_factory, monkeypatch_module):
    """Run ``casp bench`` on the shipped matrix once, keeping the in-memory rows too."""
    captured = []
    real = harness.run_matrix

    def recording(*args, **kwargs):
        rows = real(*args, **kwargs)
        captured.extend(rows)
        return rows

    monkeypatch_module.setattr(harness, "run_matrix", recording)
    out = tmp_path_factory.mktemp("bench") / "matrix.csv"
    start = time.perf_counter()
    code = cli.main(["bench", str(MATRIX), "-o", str(out)])
    elapsed = time.perf_counter() - start
    return code, out.read_text(), captured, elapsed


@pytest.fixture(scope="module")
def monkeypatch_module():
    mp = pytest.MonkeyPatch()
    yield mp
    mp.undo()


def test_criterion_3_benchmark_matrix(bench_run):
    with criterion(3, "benchmark matrix agrees across schemas and encodings, witnesses verify"):
        code, _, rows, elapsed = bench_run
        cfg = json.loads(MATRIX.read_text())
        domains = {spec["domain"] for spec in cfg["instances"]}
        assert domains == {"wseq", "is", "rf"}
        assert set(cfg["schemas"]) == {"black", "grey", "clear"}
        assert code == 0
        assert [r for r in rows if r["result"] not in ("sat", "unsat")] == []
        assert harness.schema_disagreements(rows) == []
        assert harness.encoding_disagreements(rows) == []
        assert elapsed < 600


def test_criterion_4_counter_profiles(random_runs, bench_run):
    with criterion(4, "per-schema counter profiles hold on every run"):
        runs, _ = random_runs
        problems = []
        for seed, schema, _, out in runs:
            row = stats_row(schema, "unsat" if out.complete else "timeout", out.stats)
            problems += [(seed, v) for v in harness.profile_violations(row)]
        for seed in range(200):
            p = random_program(seed, max_regular=10, max_constraint=3, width=5)
            for schema in SCHEMAS:
                res = solve(p, schema)
                problems += [(seed, v) for v in
                             harness.profile_violations(stats_row(schema, res.status, res.stats))]
        _, _, rows, _ = bench_run
        problems += [(r["instance"], v) for r in rows for v in harness.profile_violations(r)]
        assert problems == []


NON_TIGHT = [
    "#var X 0..3.\na :- b.\nb :- a.\nc :- X #< 2, not a.\n",
    "#var X 0..3.\na :- b.\nb :- a.\nb :- X #>= 2.\n:- not a.\n",
    "#var X 0..3.\n#var Y 0..3.\na :- b.\nb :- a.\na :- X #= Y.\n{d}.\nb :- d, not X #< 3.\n",
    "#var X 0..4.\na :- a.\nc :- X #< 1.\n:- a, c.\n",
    "#var X 0..4.\na :- a.\na :- X #> 3.\nc :- not a.\n:- c, X #< 2.\n",
    "#var X 0..2.\na :- a.\n:- not a.\nb :- X #< 1.\n",
]


def test_criterion_5_non_tight_programs():
    with criterion(5, "non-tight programs give exactly the oracle's answer sets"):
        for text in NON_TIGHT:
            p = parse_program(text)
            want = oracle_values(p)
            for schema in SCHEMAS:
                out = enumerate_all(p, schema)
                assert out.complete
                assert sorted(s.model.values for s in out.solutions) == want, (text, schema)


def random_constraint_set(rng: random.Random):
    names = [f"V{i}" for i in range(rng.randint(1, 4))]
    decls = []
    for name in names:
        lo = rng.randint(-5, 5)
        decls.append(VarDecl(name, lo, lo + rng.randint(0, 9)))  # at most 10 values
    cons = []
    for _ in range(rng.randint(1, 5)):
        used = rng.sample(names, rng.randint(1, len(names)))
        lhs = LinExpr(tuple((rng.choice([-3, -2, -1, 1, 2, 3]), v) for v in used))
        rhs = LinExpr(((rng.randint(-10, 10), None),))
        cons.append(ConstraintExpr(lhs, rng.choice(["<", "<=", "=", "!=", ">=", ">"]), rhs))
    return cons, decls


def test_criterion_6_theory_solver_against_brute_force():
    with criterion(6, "500 random constraint sets match brute force with valid witnesses"):
        rng = random.Random(20261018)
        start = time.perf_counter()
        for _ in range(500):
            cons, decls = random_constraint_set(rng)
            names = [d.name for d in decls]
            expected = any(
                all(c.holds(dict(zip(names, values))) for c in cons)
                for values in itertools.product(*(range(d.lo, d.hi + 1) for d in decls)))
            verdict = solve_constraints(cons, decls)
            assert verdict.sat == expected, cons
            if verdict.sat:
                assert all(c.holds(verdict.witness) for c in cons)
                assert all(d.lo <= verdict.witness[d.name] <= d.hi for d in decls)
        assert time.perf_counter() - start < 30


def test_criterion_7_bench_csv(bench_run):
    with criterion(7, "bench writes the full CSV and every row keeps the counter profile"):
        code, text, rows, _ = bench_run
        lines = text.splitlines()
        assert code == 0
        assert lines[0] == ",".join(harness.CSV_HEADER)
        expected = len(harness.expand(harness.BenchConfig.load(str(MATRIX))))
        parsed = harness.read_csv(text)
        assert len(parsed) == expected == len(rows)
        assert all(len(r) == len(harness.CSV_HEADER) and "" not in r.values() for r in parsed)
        assert [r for r in rows if harness.profile_violations(r)] == []
