"""Incremental scheduling: place jobs on device instances within a penalty budget.

Time is discrete on ``[0, horizon]``; a job occupies ``[start, start + len)`` and
must finish by the horizon. Tardiness is ``max(0, start + len - deadline)`` and
costs ``tardiness * importance``.
"""
from __future__ import annotations

import random
from dataclasses import dataclass

from ..program import Program, ProgramBuilder
from .common import Encoding, asp_sum_at_most, check_encoding, cx, exactly_one, require, tie

MAX_JOBS = 10
MAX_HORIZON = 40


@dataclass(frozen=True)
class IsInstance:
    devices: tuple  # (device_id, instance_count)
    jobs: tuple  # (job_id, device_id, len, deadline, importance)
    precedences: tuple  # (before_job, after_job)
    offline: tuple  # (device_id, instance_index), 1-based index
    max_penalty: int
    horizon: int

    def __post_init__(self):
        devs = dict(self.devices)
        if len(devs) != len(self.devices):
            raise ValueError("duplicate device id")
        if any(c < 1 for c in devs.values()):
            raise ValueError("instance_count must be at least 1")
        ids = [j[0] for j in self.jobs]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate job id")
        for jid, dev, length, _dl, imp in self.jobs:
            if dev not in devs:
                raise ValueError(f"job {jid} uses unknown device {dev}")
            if length < 1:
                raise ValueError(f"job {jid} needs len >= 1")
            if imp < 1:
                raise ValueError(f"job {jid} needs importance >= 1")
        for dev, idx in self.offline:
            if dev not in devs or not 1 <= idx <= devs[dev]:
                raise ValueError(f"offline entry ({dev}, {idx}) names no instance")
        known = set(ids)
        succ = {j: [] for j in ids}
        for a, b in self.precedences:
            if a not in known or b not in known:
                raise ValueError(f"precedence ({a}, {b}) names an unknown job")
            succ[a].append(b)
        if _has_cycle(succ):
            raise ValueError("precedence graph has a cycle")
        if self.horizon < 0 or self.max_penalty < 0:
            raise ValueError("horizon and max_penalty must be non-negative")

    def job(self, jid):
        for j in self.jobs:
            if j[0] == jid:
                return j
        raise KeyError(jid)

    def usable_instances(self, device) -> list:
        count = dict(self.devices)[device]
        off = {i for d, i in self.offline if d == device}
        return [i for i in range(1, count + 1) if i not in off]

    def to_dict(self) -> dict:
        return {
            "domain": "is",
            "devices": [list(d) for d in self.devices],
            "jobs": [list(j) for j in self.jobs],
            "precedences": [list(p) for p in self.precedences],
            "offline": [list(o) for o in self.offline],
            "max_penalty": self.max_penalty,
            "horizon": self.horizon,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "IsInstance":
        return cls(
            tuple(tuple(x) for x in d["devices"]),
            tuple(tuple(x) for x in d["jobs"]),
            tuple(tuple(x) for x in d.get("precedences", ())),
            tuple(tuple(x) for x in d.get("offline", ())),
            d["max_penalty"],
            d["horizon"],
        )


def _has_cycle(succ: dict) -> bool:
    state = dict.fromkeys(succ, 0)

    def visit(u):
        state[u] = 1
        for v in succ[u]:
            if state[v] == 1 or (state[v] == 0 and visit(v)):
                return True
        state[u] = 2
        return False

    return any(state[u] == 0 and visit(u) for u in succ)


def _greedy(jobs, precedences, usable) -> tuple[int, dict]:
    """List schedule in job order; returns (makespan, end times)."""
    free = {(d, i): 0 for d, insts in usable.items() for i in insts}
    end = {}
    preds = {j[0]: [a for a, b in precedences if b == j[0]] for j in jobs}
    for jid, dev, length, _dl, _imp in jobs:
        ready = max((end[p] for p in preds[jid]), default=0)
        slot = min(usable[dev], key=lambda i: (max(free[(dev, i)], ready), i))
        start = max(free[(dev, slot)], ready)
        end[jid] = start + length
        free[(dev, slot)] = end[jid]
    return max(end.values(), default=0), end


def gen_is(n_jobs: int, seed: int) -> IsInstance:
    if not 1 <= n_jobs <= MAX_JOBS:
        raise ValueError(f"job count must be in [1, {MAX_JOBS}], got {n_jobs}")
    rng = random.Random(f"is-{n_jobs}-{seed}")
    n_dev = rng.randint(1, 2)
    devices = tuple((f"d{k}", rng.randint(1, 2)) for k in range(1, n_dev + 1))
    offline = []
    for dev, count in devices:
        if count > 1 and rng.random() < 0.3:
            offline.append((dev, rng.randint(1, count)))
    jobs = []
    for k in range(1, n_jobs + 1):
        dev = devices[rng.randrange(n_dev)][0]
        length = rng.randint(1, 4)
        jobs.append([f"j{k}", dev, length, 0, rng.randint(1, 3)])
    precedences = []
    for a in range(1, n_jobs + 1):
        for b in range(a + 1, n_jobs + 1):
            if rng.random() < 0.15:
                precedences.append((f"j{a}", f"j{b}"))
    inst_off = tuple(offline)
    usable = {}
    for dev, count in devices:
        off = {i for d, i in inst_off if d == dev}
        usable[dev] = [i for i in range(1, count + 1) if i not in off]
    makespan, _ = _greedy(jobs, precedences, usable)
    for j in jobs:
        j[3] = rng.randint(j[2], max(j[2], makespan))
    _, end = _greedy(jobs, precedences, usable)
    penalty = sum(max(0, end[j[0]] - j[3]) * j[4] for j in jobs)
    horizon = min(MAX_HORIZON, makespan + rng.randint(0, 2))
    return IsInstance(
        devices, tuple(tuple(j) for j in jobs), tuple(precedences), inst_off,
        int(penalty * rng.uniform(0.5, 1.0)), horizon,
    )


def _same_device_pairs(inst: IsInstance):
    jobs = inst.jobs
    for a in range(len(jobs)):
        for b in range(a + 1, len(jobs)):
            if jobs[a][1] == jobs[b][1]:
                yield jobs[a], jobs[b]


def _encode_pure_asp(inst: IsInstance) -> Program:
    b = ProgramBuilder()
    H = inst.horizon
    stages = []
    for jid, dev, length, dl, imp in inst.jobs:
        exactly_one(b, [f"on_instance({jid},{i})" for i in inst.usable_instances(dev)],
                    f"assigned({jid})")
        starts = list(range(0, H - length + 1))
        exactly_one(b, [f"start({jid},{s})" for s in starts], f"started({jid})")
        values = set()
        for s in starts:
            for t in range(s, s + length):
                b.rule(f"run({jid},{t})", pos=[f"start({jid},{s})"])
            p = max(0, s + length - dl) * imp
            b.rule(f"penalty({jid},{p})", pos=[f"start({jid},{s})"])
            values.add(p)
        stages.append([(f"penalty({jid},{p})", p) for p in sorted(values)])
    for ja, jb in _same_device_pairs(inst):
        for i in inst.usable_instances(ja[1]):
            for t in range(H):
                b.constraint(pos=[f"run({ja[0]},{t})", f"run({jb[0]},{t})",
                                  f"on_instance({ja[0]},{i})", f"on_instance({jb[0]},{i})"])
    for before, after in inst.precedences:
        lb = inst.job(before)[2]
        la = inst.job(after)[2]
        for s in range(0, H - lb + 1):
            for s2 in range(0, min(s + lb, H - la + 1)):
                b.constraint(pos=[f"start({before},{s})", f"start({after},{s2})"])
    asp_sum_at_most(b, "penaltySum", stages, inst.max_penalty)
    return b.build()


def _theory_part(b: ProgramBuilder, inst: IsInstance, inst_var) -> None:
    """Start times, tardiness, penalties and non-overlap as required constraints."""
    H = inst.horizon
    for jid, dev, length, dl, imp in inst.jobs:
        b.declare(f"start({jid})", 0, max(0, H - length))
        late = max(0, H - dl)
        b.declare(f"td({jid})", 0, late)
        b.declare(f"penalty({jid})", 0, late * imp)
        if H - length < 0:
            require(b, cx(f"start({jid})", "<=", H - length))
    for ja, jb in _same_device_pairs(inst):
        b.declare(f"before({ja[0]},{jb[0]})", 0, 1)
    for jid, dev, length, dl, imp in inst.jobs:
        insts = [inst_var(jid, i) for i in inst.usable_instances(dev)]
        require(b, cx(insts, "=", 1))
        require(b, cx(f"td({jid})", ">=", [f"start({jid})", length - dl]))
        require(b, cx(f"penalty({jid})", "=", [(imp, f"td({jid})")]))
    for ja, jb in _same_device_pairs(inst):
        j, k = ja[0], jb[0]
        sj, sk, bv = f"start({j})", f"start({k})", f"before({j},{k})"
        for i in inst.usable_instances(ja[1]):
            oj, ok = inst_var(j, i), inst_var(k, i)
            # j before k, when both run on instance i
            require(b, cx([sj, (-1, sk), (H, bv), (H, oj), (H, ok)], "<=", 3 * H - ja[2]))
            # k before j, when both run on instance i
            require(b, cx([sk, (-1, sj), (-H, bv), (H, oj), (H, ok)], "<=", 2 * H - jb[2]))
    for before, after in inst.precedences:
        require(b, cx(f"start({after})", ">=", [f"start({before})", inst.job(before)[2]]))
    require(b, cx([f"penalty({j[0]})" for j in inst.jobs], "<=", inst.max_penalty))


def _encode_true_casp(inst: IsInstance) -> Program:
    b = ProgramBuilder()
    for jid, dev, *_ in inst.jobs:
        for i in inst.usable_instances(dev):
            b.declare(f"inst({jid},{i})", 0, 1)
    for jid, dev, *_ in inst.jobs:
        atoms = [f"on_instance({jid},{i})" for i in inst.usable_instances(dev)]
        exactly_one(b, atoms, f"assigned({jid})")
        for i in inst.usable_instances(dev):
            tie(b, f"on_instance({jid},{i})", cx(f"inst({jid},{i})", "=", 1))
    _theory_part(b, inst, lambda j, i: f"inst({j},{i})")
    return b.build()


def _encode_pure_csp(inst: IsInstance) -> Program:
    b = ProgramBuilder()
    for jid, dev, *_ in inst.jobs:
        for i in inst.usable_instances(dev):
            b.declare(f"on_instance({jid},{i})", 0, 1)
    _theory_part(b, inst, lambda j, i: f"on_instance({j},{i})")
    return b.build()


def encode_is(inst: IsInstance, encoding) -> Program:
    enc = check_encoding("is", encoding)
    return {
        Encoding.PURE_ASP: _encode_pure_asp,
        Encoding.TRUE_CASP: _encode_true_casp,
        Encoding.PURE_CSP: _encode_pure_csp,
    }[enc](inst)
