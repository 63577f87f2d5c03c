"""Command-line front end: ``casp solve|gen|encode|verify|bench``."""
from __future__ import annotations

import argparse
import json
import sys
import time
from typing import Optional

from . import harness
from .benchmarks import (GENERATORS, UnsupportedEncoding, encode, instance_from_json,
                         instance_to_json, verify)
from .benchmarks.common import check_encoding
from .integration import Blocking, CaspResult, Schema, enumerate_all, solve
from .program import AtomKind, ParseError, Program, format_program, parse_program

EXIT_SAT = 10
EXIT_UNSAT = 20
EXIT_TIMEOUT = 30
EXIT_ERROR = 1


class CliError(Exception):
    pass


def _read(path: Optional[str]) -> str:
    if path is None or path == "-":
        return sys.stdin.read()
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}") from None


def _write(path: Optional[str], text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    try:
        with open(path, "w") as fh:
            fh.write(text)
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc.strerror}") from None


def _moves(names) -> list:
    out = []
    for name in names:
        if name.startswith("pivot(") and name.endswith(")"):
            s, i, d = name[len("pivot("):-1].split(",")
            out.append([int(s), int(i), d])
    return sorted(out)


def _model_lines(program: Program, model, witness) -> list:
    regular = sorted(program.atoms[a].name for a in model.positive_ids
                     if program.atoms[a].kind is AtomKind.REGULAR)
    lines = ["Answer: " + " ".join(regular)]
    clits = []
    for aid, val in model.constraint_literals:
        expr = program.gamma[aid]
        clits.append(str(expr) if val else f"not {expr}")
    if clits:
        lines.append("Constraints: " + "; ".join(clits))
    if witness:
        lines.append("Witness: " + " ".join(f"{k}={v}" for k, v in sorted(witness.items())))
    return lines


def _stats_line(stats) -> str:
    d = stats.as_dict()
    return "Stats: " + " ".join(f"{k}={d[k]}" for k in sorted(d))


def cmd_solve(args) -> int:
    program = parse_program(_read(args.program))
    schema = Schema(args.schema)
    if args.all:
        result = enumerate_all(program, schema, args.timeout_s, args.minimize_core, args.seed)
        for k, sol in enumerate(result.solutions, start=1):
            print(f"Solution {k}")
            for line in _model_lines(program, sol.model, sol.witness):
                print("  " + line)
        if not result.complete:
            print(f"TIMEOUT after {len(result.solutions)} solution(s)")
            code = EXIT_TIMEOUT
        elif result.solutions:
            print(f"SAT {len(result.solutions)} solution(s)")
            code = EXIT_SAT
        else:
            print("UNSAT")
            code = EXIT_UNSAT
        print(_stats_line(result.stats))
        if args.output:
            sols = [harness.solution_assignments(program, CaspResult("sat", s.model, s.witness))
                    for s in result.solutions]
            _write(args.output, json.dumps({"result": "sat" if sols else "unsat",
                                            "complete": result.complete,
                                            "solutions": sols}, indent=2, sort_keys=True) + "\n")
        return code
    res = solve(program, schema, Blocking(args.blocking), args.timeout_s,
                args.minimize_core, args.seed)
    if res.sat:
        print("SAT")
        for line in _model_lines(program, res.model, res.witness):
            print(line)
    else:
        print(res.status.upper())
    print(_stats_line(res.stats))
    if args.output:
        assignments = harness.solution_assignments(program, res) if res.sat else {}
        payload = {"result": res.status, "assignments": assignments,
                   "moves": _moves(assignments)}
        _write(args.output, json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return {"sat": EXIT_SAT, "unsat": EXIT_UNSAT}.get(res.status, EXIT_TIMEOUT)


def cmd_gen(args) -> int:
    if args.domain == "rf":
        if args.t is None:
            raise CliError("rf instances need --t (number of moves)")
        inst = GENERATORS["rf"](args.n, args.t, args.seed)
    else:
        inst = GENERATORS[args.domain](args.n, args.seed)
    _write(args.output, instance_to_json(inst))
    return 0


def cmd_encode(args) -> int:
    domain = args.domain
    if domain is not None:
        # reject impossible combinations before touching the instance
        check_encoding(domain, args.encoding)
    inst = instance_from_json(_read(args.instance))
    found = inst.to_dict()["domain"]
    if domain is not None and domain != found:
        raise CliError(f"instance is a {found} instance, not {domain}")
    program = encode(inst, args.encoding)
    _write(args.output, format_program(program))
    return 0


def cmd_verify(args) -> int:
    inst = instance_from_json(_read(args.instance))
    try:
        sol = json.loads(_read(args.solution))
    except json.JSONDecodeError as exc:
        raise CliError(f"solution is not valid JSON: {exc}") from None
    ok = sol.get("result", "sat") == "sat" and verify(
        inst, sol.get("assignments", {}), sol.get("moves") or None)
    print("PASS" if ok else "FAIL")
    return 0 if ok else 1


def cmd_bench(args) -> int:
    cfg = harness.BenchConfig.load(args.config)
    if args.timeout_s is not None:
        cfg.timeout_s = args.timeout_s
    start = time.monotonic()

    def progress(row):
        if args.verbose:
            print(f"{row['instance']} {row['encoding']} {row['schema']}: {row['result']} "
                  f"({float(row['wall_ms']):.0f} ms)", file=sys.stderr)

    rows = harness.run_matrix(cfg, args.workers, progress)
    csv_text = harness.to_csv(rows)
    _write(args.output, csv_text)
    table = harness.totals_table(rows)
    if args.table:
        _write(args.table, table)
    out = sys.stderr if args.output in (None, "-") else sys.stdout
    print(table, end="", file=out)
    print(f"{len(rows)} runs in {time.monotonic() - start:.1f} s", file=out)
    bad = harness.schema_disagreements(rows)
    for cell in bad:
        print("schema disagreement: " + " ".join(cell), file=sys.stderr)
    return 1 if bad else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="casp", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve a program file")
    p.add_argument("program", nargs="?", help="program file (default: stdin)")
    p.add_argument("--schema", choices=[s.value for s in Schema], default="clear")
    p.add_argument("--blocking", choices=[b.value for b in Blocking], default="theory")
    p.add_argument("--minimize-core", action="store_true")
    p.add_argument("--timeout-s", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--all", action="store_true", help="enumerate every answer set")
    p.add_argument("-o", "--output", help="write the solution as JSON")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("gen", help="generate a benchmark instance")
    p.add_argument("--domain", choices=sorted(GENERATORS), required=True)
    p.add_argument("--n", type=int, required=True, help="leaves, jobs or segments")
    p.add_argument("--t", type=int, default=None, help="moves (rf only)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("encode", help="encode an instance as a program")
    p.add_argument("instance", nargs="?", help="instance JSON (default: stdin)")
    p.add_argument("--domain", choices=sorted(GENERATORS))
    p.add_argument("--encoding", required=True,
                   help="pure-asp, true-casp or pure-csp")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("verify", help="check a solution against its instance")
    p.add_argument("instance")
    p.add_argument("solution")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="run the schema x encoding matrix")
    p.add_argument("config")
    p.add_argument("-o", "--output", help="CSV path (default: stdout)")
    p.add_argument("--table", help="also write the totals table here")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--timeout-s", type=float, default=None, help="override the per-run budget")
    p.add_argument("-v", "--verbose", action="store_true")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
    except (CliError, UnsupportedEncoding, ValueError, KeyError, OverflowError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
