"""Schema x encoding experiment matrix: expansion, execution and reporting."""
from __future__ import annotations

import csv
import io
import json
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict
from typing import Optional

from .benchmarks import GENERATORS, encode, instance_from_json, verify
from .benchmarks.common import Encoding, supported_encodings
from .integration import Blocking, CaspResult, Schema, solve
from .program import AtomKind, Program

CSV_HEADER = (
    "domain", "encoding", "instance", "schema", "blocking", "result", "wall_ms",
    "decisions", "conflicts", "candidates", "theory_calls", "theory_conflicts",
    "base_instantiations", "learned_count",
)


@dataclass(frozen=True)
class RunSpec:
    domain: str
    encoding: str
    instance: str
    schema: str
    blocking: str = "theory"
    seed: int = 0
    timeout_s: Optional[float] = 60.0
    minimize_core: bool = False

    def __post_init__(self):
        enc = Encoding.parse(self.encoding)
        if enc not in supported_encodings(self.domain):
            raise ValueError(f"domain {self.domain} has no {enc.value} encoding")


@dataclass
class BenchConfig:
    instances: list = field(default_factory=list)  # [{domain, sizes, seeds}]
    encodings: list = field(default_factory=lambda: [e.value for e in Encoding])
    schemas: list = field(default_factory=lambda: [s.value for s in Schema])
    blocking: str = "theory"
    timeout_s: Optional[float] = 60.0
    workers: int = 1
    seed: int = 0
    minimize_core: bool = False

    @classmethod
    def from_dict(cls, d: dict) -> "BenchConfig":
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown bench config keys: {sorted(extra)}")
        cfg = cls(**d)
        for e in cfg.encodings:
            Encoding.parse(e)
        for s in cfg.schemas:
            Schema(s)
        Blocking(cfg.blocking)
        return cfg

    @classmethod
    def load(cls, path: str) -> "BenchConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def instance_name(domain: str, size, seed: int) -> str:
    if domain == "rf":
        n, t = size
        return f"rf-n{n}-t{t}-s{seed}"
    return f"{domain}-n{size}-s{seed}"


def generate(domain: str, size, seed: int):
    gen = GENERATORS.get(domain)
    if gen is None:
        raise ValueError(f"unknown domain {domain!r}")
    if domain == "rf":
        return gen(*size, seed)
    return gen(size, seed)


def expand(cfg: BenchConfig) -> list:
    """(RunSpec, instance dict) pairs for every supported cell of the matrix."""
    jobs = []
    for block in cfg.instances:
        domain = block["domain"]
        for size in block.get("sizes", []):
            for seed in block.get("seeds", []):
                inst = generate(domain, size, seed)
                name = instance_name(domain, size, seed)
                for enc in cfg.encodings:
                    if Encoding.parse(enc) not in supported_encodings(domain):
                        continue
                    for schema in cfg.schemas:
                        spec = RunSpec(domain, Encoding.parse(enc).value, name, schema,
                                       cfg.blocking, cfg.seed, cfg.timeout_s, cfg.minimize_core)
                        jobs.append((spec, inst.to_dict()))
    return jobs


def solution_assignments(program: Program, result: CaspResult) -> dict:
    """Name to value map: true regular atoms as 1, plus the theory witness."""
    out = {}
    if result.model is not None:
        for aid in result.model.positive_ids:
            atom = program.atoms[aid]
            if atom.kind is AtomKind.REGULAR:
                out[atom.name] = 1
    if result.witness:
        out.update(result.witness)
    return out


def run_one(spec: RunSpec, instance: dict) -> dict:
    """Execute one cell; failures become a row with result ``error``."""
    row = {k: 0 for k in CSV_HEADER}
    row.update(domain=spec.domain, encoding=spec.encoding, instance=spec.instance,
               schema=spec.schema, blocking=spec.blocking, wall_ms=0.0)
    try:
        inst = instance_from_json(json.dumps(instance))
        program = encode(inst, spec.encoding)
        res = solve(program, Schema(spec.schema), Blocking(spec.blocking),
                    spec.timeout_s, spec.minimize_core, spec.seed)
        stats = res.stats.as_dict()
        for k in CSV_HEADER[7:]:
            row[k] = stats[k]
        row["wall_ms"] = stats["wall_ms"]
        row["result"] = res.status
        # kept off the CSV, but needed to audit the per-schema counter profile
        row["final_rejections"] = stats["final_rejections"]
        row["learned_trace"] = list(res.stats.learned_trace)
        if res.sat and not verify(inst, solution_assignments(program, res)):
            row["result"] = "error"
            row["detail"] = "witness rejected by domain verifier"
    except Exception as exc:  # noqa: BLE001 - a failing cell must not stop the matrix
        row["result"] = "error"
        row["detail"] = "".join(traceback.format_exception_only(type(exc), exc)).strip()
    return row


def profile_violations(row: dict) -> list:
    """Ways a row breaks the counter profile its schema must show (empty if none).

    Works on rows read back from CSV as well; the checks that need the
    in-memory extras are skipped when those are absent.
    """
    if row["result"] not in ("sat", "unsat", "timeout"):
        return [f"result {row['result']}"]
    out = []
    inst, cand = int(row["base_instantiations"]), int(row["candidates"])
    if row["schema"] == "black":
        want = cand + (1 if row["result"] == "unsat" else 0)
        # a timeout may strike before or after the next fresh handle exists
        ok = inst == want or (row["result"] == "timeout" and inst in (cand, cand + 1))
        if not ok:
            out.append(f"black: base_instantiations={inst}, candidates={cand}")
    elif inst != 1 and not (row["result"] == "timeout" and inst == 0):
        out.append(f"{row['schema']}: base_instantiations={inst}")
    trace = row.get("learned_trace")
    if row["schema"] == "grey" and trace is not None:
        if any(b < a for a, b in zip(trace, trace[1:])):
            out.append("grey: learned_count decreased")
    if row["schema"] == "clear" and int(row.get("final_rejections", 0)):
        out.append("clear: final theory check rejected a candidate")
    return out


def _run_packed(job):
    return run_one(*job)


def sort_key(row: dict):
    return (row["domain"], row["instance"], row["encoding"], row["schema"])


def run_matrix(cfg: BenchConfig, workers: Optional[int] = None, progress=None) -> list:
    jobs = expand(cfg)
    workers = cfg.workers if workers is None else workers
    rows = []
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for row in pool.map(_run_packed, jobs):
                rows.append(row)
                if progress:
                    progress(row)
    else:
        for job in jobs:
            row = _run_packed(job)
            rows.append(row)
            if progress:
                progress(row)
    rows.sort(key=sort_key)
    return rows


def to_csv(rows: list) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in sorted(rows, key=sort_key):
        writer.writerow([_fmt(row[k]) for k in CSV_HEADER])
    return buf.getvalue()


def _fmt(value):
    if isinstance(value, float):
        return f"{value:.3f}"
    return value


def read_csv(text: str) -> list:
    return list(csv.DictReader(io.StringIO(text)))


def schema_disagreements(rows: list) -> list:
    """(domain, instance, encoding) cells where one schema says sat and another unsat."""
    verdicts: dict = {}
    for r in rows:
        if r["result"] in ("sat", "unsat"):
            verdicts.setdefault((r["domain"], r["instance"], r["encoding"]), set()).add(r["result"])
    return sorted(k for k, v in verdicts.items() if len(v) > 1)


def encoding_disagreements(rows: list) -> list:
    """(domain, instance) pairs whose encodings disagree on satisfiability."""
    verdicts: dict = {}
    for r in rows:
        if r["result"] in ("sat", "unsat"):
            verdicts.setdefault((r["domain"], r["instance"]), set()).add(r["result"])
    return sorted(k for k, v in verdicts.items() if len(v) > 1)


def totals_table(rows: list) -> str:
    """Per (schema, encoding) totals, one line each."""
    groups: dict = {}
    for r in rows:
        g = groups.setdefault((r["schema"], r["encoding"]), {
            "runs": 0, "sat": 0, "unsat": 0, "timeout": 0, "error": 0, "wall_ms": 0.0,
            "candidates": 0, "theory_calls": 0, "conflicts": 0,
        })
        g["runs"] += 1
        g[r["result"]] = g.get(r["result"], 0) + 1
        for k in ("wall_ms", "candidates", "theory_calls", "conflicts"):
            g[k] += float(r[k]) if k == "wall_ms" else int(r[k])
    cols = ("schema", "encoding", "runs", "sat", "unsat", "timeout", "error",
            "total_wall_s", "candidates", "theory_calls", "conflicts")
    lines = [" ".join(f"{c:>12}" for c in cols)]
    for (schema, enc), g in sorted(groups.items()):
        vals = (schema, enc, g["runs"], g["sat"], g["unsat"], g["timeout"], g["error"],
                f"{g['wall_ms'] / 1000.0:.2f}", g["candidates"], g["theory_calls"], g["conflicts"])
        lines.append(" ".join(f"{v:>12}" for v in vals))
    return "\n".join(lines) + "\n"


def config_to_json(cfg: BenchConfig) -> str:
    return json.dumps(asdict(cfg), indent=2, sort_keys=True) + "\n"
