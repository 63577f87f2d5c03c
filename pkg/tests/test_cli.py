import json
from pathlib import Path

import pytest

from casp import harness
from casp.cli import EXIT_ERROR, EXIT_SAT, EXIT_TIMEOUT, EXIT_UNSAT, main

DATA = Path(__file__).parent.parent / "data"
LIGHT = str(DATA / "light_switch.lp")


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


class TestSolve:
    @pytest.mark.parametrize("schema", ["black", "grey", "clear"])
    def test_light_switch(self, capsys, schema):
        code, out, _ = run(capsys, "solve", LIGHT, "--schema", schema)
        assert code == EXIT_SAT
        lines = out.splitlines()
        assert lines[0] == "SAT"
        assert lines[1] == "Answer: lightOn switch"
        assert lines[2] == "Constraints: not X #< 12"
        x = int(lines[3].split("X=")[1])
        assert 12 <= x <= 24
        assert lines[4].startswith("Stats: ")

    def test_enumerate(self, capsys):
        code, out, _ = run(capsys, "solve", LIGHT, "--all")
        assert code == EXIT_SAT
        assert "SAT 1 solution(s)" in out

    def test_empty_file(self, capsys, tmp_path):
        empty = tmp_path / "empty.lp"
        empty.write_text("")
        code, out, _ = run(capsys, "solve", empty)
        assert code == EXIT_SAT and out.splitlines()[1] == "Answer: "

    def test_zero_budget(self, capsys):
        code, out, _ = run(capsys, "solve", LIGHT, "--timeout-s", "0")
        assert code == EXIT_TIMEOUT and out.startswith("TIMEOUT")

    def test_unsat(self, capsys, tmp_path):
        f = tmp_path / "neg.lp"
        f.write_text("#var X 0..4.\nok :- X #< 0.\n:- not ok.\n")
        for schema in ("black", "grey", "clear"):
            code, out, _ = run(capsys, "solve", f, "--schema", schema, "--minimize-core")
            assert code == EXIT_UNSAT and out.startswith("UNSAT")

    def test_parse_error(self, capsys, tmp_path):
        f = tmp_path / "bad.lp"
        f.write_text("a :- X #< 12.\n")
        code, _, err = run(capsys, "solve", f)
        assert code == EXIT_ERROR
        assert "undeclared constraint variable X" in err

    def test_missing_file(self, capsys, tmp_path):
        code, _, err = run(capsys, "solve", tmp_path / "nope.lp")
        assert code == EXIT_ERROR and "cannot read" in err

    def test_json_output(self, capsys, tmp_path):
        out_path = tmp_path / "sol.json"
        code, _, _ = run(capsys, "solve", LIGHT, "-o", out_path)
        sol = json.loads(out_path.read_text())
        assert code == EXIT_SAT and sol["result"] == "sat"
        assert sol["assignments"]["lightOn"] == 1 and sol["assignments"]["X"] >= 12


class TestPipeline:
    def test_gen_is_byte_identical(self, capsys, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        for path in (a, b):
            assert run(capsys, "gen", "--domain", "wseq", "--n", 4, "--seed", 1, "-o", path)[0] == 0
        assert a.read_bytes() == b.read_bytes()

    def test_rf_needs_moves(self, capsys):
        assert run(capsys, "gen", "--domain", "rf", "--n", 3)[0] == EXIT_ERROR

    def test_rf_has_no_pure_csp(self, capsys, tmp_path):
        inst = tmp_path / "rf.json"
        run(capsys, "gen", "--domain", "rf", "--n", 3, "--t", 1, "-o", inst)
        code, _, err = run(capsys, "encode", inst, "--domain", "rf", "--encoding", "pure-csp")
        assert code == EXIT_ERROR and "pure-csp" in err
        code, _, _ = run(capsys, "encode", inst, "--encoding", "pure-csp")
        assert code == EXIT_ERROR

    def test_domain_mismatch(self, capsys, tmp_path):
        inst = tmp_path / "w.json"
        run(capsys, "gen", "--domain", "wseq", "--n", 3, "-o", inst)
        code, _, err = run(capsys, "encode", inst, "--domain", "is", "--encoding", "pure-asp")
        assert code == EXIT_ERROR

    @pytest.mark.parametrize("domain,extra,enc", [
        ("wseq", [], "true-casp"), ("wseq", [], "pure-csp"), ("is", [], "true-casp"),
        ("is", [], "pure-asp"), ("rf", ["--t", 2], "pure-asp"), ("rf", ["--t", 2], "true-casp"),
    ])
    def test_solve_then_verify(self, capsys, tmp_path, domain, extra, enc):
        inst, prog, sol = tmp_path / "i.json", tmp_path / "p.lp", tmp_path / "s.json"
        run(capsys, "gen", "--domain", domain, "--n", 4, *extra, "--seed", 2, "-o", inst)
        assert run(capsys, "encode", inst, "--encoding", enc, "-o", prog)[0] == 0
        assert run(capsys, "solve", prog, "-o", sol)[0] == EXIT_SAT
        code, out, _ = run(capsys, "verify", inst, sol)
        assert (code, out.strip()) == (0, "PASS")

    def test_verify_fails_on_a_wrong_solution(self, capsys, tmp_path):
        inst, sol = tmp_path / "i.json", tmp_path / "s.json"
        run(capsys, "gen", "--domain", "rf", "--n", 3, "--t", 1, "-o", inst)
        sol.write_text(json.dumps({"result": "sat", "assignments": {}, "moves": []}))
        code, out, _ = run(capsys, "verify", inst, sol)
        assert (code, out.strip()) == (1, "FAIL")


SMALL = {
    "instances": [{"domain": "wseq", "sizes": [3], "seeds": [0, 1]},
                  {"domain": "rf", "sizes": [[3, 1]], "seeds": [0]}],
    "schemas": ["clear", "black", "grey"],
    "timeout_s": 30,
}


class TestBench:
    def test_empty_matrix_is_header_only(self, capsys, tmp_path):
        cfg = tmp_path / "empty.json"
        cfg.write_text(json.dumps({"instances": []}))
        out_csv = tmp_path / "out.csv"
        assert run(capsys, "bench", cfg, "-o", out_csv)[0] == 0
        assert out_csv.read_text() == ",".join(harness.CSV_HEADER) + "\n"

    def test_small_matrix(self, capsys, tmp_path):
        cfg = tmp_path / "small.json"
        cfg.write_text(json.dumps(SMALL))
        first, second = tmp_path / "a.csv", tmp_path / "b.csv"
        table = tmp_path / "t.txt"
        assert run(capsys, "bench", cfg, "-o", first, "--table", table)[0] == 0
        assert run(capsys, "bench", cfg, "-o", second, "--workers", 2)[0] == 0
        rows = harness.read_csv(first.read_text())
        # wseq: 2 instances x 3 encodings; rf: 1 instance x 2 encodings; 3 schemas each
        assert len(rows) == (2 * 3 + 2) * 3
        assert all(len(r) == 14 and None not in r.values() for r in rows)
        keys = [harness.sort_key(r) for r in rows]
        assert keys == sorted(keys)
        assert all(r["result"] == "sat" for r in rows)
        assert not any(harness.profile_violations(r) for r in rows)

        def strip_wall(text):
            return [line.split(",")[:6] + line.split(",")[7:] for line in text.splitlines()]
        assert strip_wall(first.read_text()) == strip_wall(second.read_text())
        assert "total_wall_s" in table.read_text()

    def test_unknown_config_key(self, capsys, tmp_path):
        cfg = tmp_path / "bad.json"
        cfg.write_text(json.dumps({"instances": [], "budget": 3}))
        assert run(capsys, "bench", cfg)[0] == EXIT_ERROR


class TestHarness:
    def test_runspec_rejects_rf_pure_csp(self):
        with pytest.raises(ValueError):
            harness.RunSpec("rf", "pure-csp", "rf-n3-t1-s0", "black")

    def test_expand_skips_unsupported_cells(self):
        cfg = harness.BenchConfig.from_dict(SMALL)
        jobs = harness.expand(cfg)
        assert len(jobs) == 24
        assert not [s for s, _ in jobs if s.domain == "rf" and s.encoding == "pure-csp"]

    def test_disagreement_audit(self):
        row = dict.fromkeys(harness.CSV_HEADER, 0)
        row.update(domain="wseq", instance="w", encoding="pure-asp", blocking="theory")
        rows = [dict(row, schema="black", result="sat"), dict(row, schema="grey", result="unsat"),
                dict(row, schema="clear", result="timeout")]
        assert harness.schema_disagreements(rows) == [("wseq", "w", "pure-asp")]
        assert harness.encoding_disagreements(rows) == [("wseq", "w")]
        assert harness.schema_disagreements(rows[:1] + rows[2:]) == []

    def test_profile_violations(self):
        row = dict.fromkeys(harness.CSV_HEADER, 0)
        row.update(schema="black", result="unsat", candidates=2, base_instantiations=3)
        assert harness.profile_violations(row) == []
        assert harness.profile_violations(dict(row, base_instantiations=2))
        grey = dict(row, schema="grey", base_instantiations=1, learned_trace=[1, 3, 2])
        assert harness.profile_violations(grey) == ["grey: learned_count decreased"]
        assert harness.profile_violations(dict(row, result="error"))

    def test_error_rows_do_not_stop_the_matrix(self):
        spec = harness.RunSpec("wseq", "pure-asp", "wseq-n3-s0", "black")
        row = harness.run_one(spec, {"domain": "wseq", "leaves": [[1, 1]], "max_cost": 0})
        assert row["result"] == "error" and "two leaves" in row["detail"]
