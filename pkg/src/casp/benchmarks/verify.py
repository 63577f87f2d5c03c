"""Domain checks that replay a decoded solution against the instance alone.

Nothing here is shared with the encoders: costs, schedules and chain
geometry are recomputed from the instance data.
"""
from __future__ import annotations

import re
from typing import Mapping

from .folding import RfInstance
from .sched import IsInstance
from .wseq import WseqInstance

_CALL = re.compile(r"^(\w+)\((.*)\)$")


class DecodeError(ValueError):
    pass


def _calls(assignments: Mapping[str, int], name: str, arity: int) -> list:
    """Argument tuples of entries ``name(args)`` with ``arity`` arguments and value 1.

    The arity filter keeps a constraint variable such as ``start(j1)`` that
    happens to equal 1 apart from the atoms ``start(j1,1)``.
    """
    out = []
    for key, val in assignments.items():
        m = _CALL.match(key)
        if m and m.group(1) == name and val == 1:
            args = tuple(m.group(2).split(","))
            if len(args) == arity:
                out.append(args)
    return out


def decode(instance, assignments: Mapping[str, int], moves=None):
    """Domain-level solution from a name to value map of true atoms and variables."""
    if isinstance(instance, WseqInstance):
        return _decode_wseq(instance, assignments)
    if isinstance(instance, IsInstance):
        return _decode_is(instance, assignments)
    if isinstance(instance, RfInstance):
        if moves is None or (not moves and _calls(assignments, "pivot", 3)):
            moves = sorted((int(s), int(i), d) for s, i, d in _calls(assignments, "pivot", 3))
        return [tuple(m) for m in moves]
    raise DecodeError(f"unknown instance type {type(instance).__name__}")


def _decode_wseq(inst, assignments):
    n = inst.n
    seq = [None] * n
    for l, p in _calls(assignments, "leafPos", 2):
        l, p = int(l), int(p)
        if not (1 <= l <= n and 1 <= p <= n) or seq[p - 1] is not None:
            raise DecodeError(f"bad or repeated position {p}")
        seq[p - 1] = l
    if None in seq:
        raise DecodeError("some position holds no leaf")
    colors = [None] * n
    for p, c in _calls(assignments, "posColor", 2):
        p = int(p)
        if not 2 <= p <= n or colors[p - 1] is not None:
            raise DecodeError(f"bad or repeated color at position {p}")
        colors[p - 1] = c
    return seq, colors[1:]


def _decode_is(inst, assignments):
    starts = {}
    where = {}
    for jid, *_ in inst.jobs:
        key = f"start({jid})"
        if key in assignments:
            starts[jid] = assignments[key]
    for jid, s in _calls(assignments, "start", 2):
        if jid in starts and starts[jid] != int(s):
            raise DecodeError(f"conflicting start times for {jid}")
        starts[jid] = int(s)
    for jid, i in _calls(assignments, "on_instance", 2):
        if jid in where:
            raise DecodeError(f"job {jid} on two instances")
        where[jid] = int(i)
    return {jid: (starts.get(jid), where.get(jid)) for jid, *_ in inst.jobs}


def verify_wseq(inst: WseqInstance, sequence, colors) -> bool:
    """``sequence`` lists 1-based leaves by position; ``colors`` covers positions 2..n."""
    n = len(inst.leaves)
    if sorted(sequence) != list(range(1, n + 1)) or len(colors) != n - 1:
        return False
    total = 0
    for p in range(1, n):
        w, c = inst.leaves[sequence[p] - 1]
        wq, cq = inst.leaves[sequence[p - 1] - 1]
        color = colors[p - 1]
        if color == "red":
            total += w + wq
        elif color == "green":
            total += c + cq
        elif color == "blue":
            total += w + c
        else:
            return False
    return total <= inst.max_cost


def verify_is(inst: IsInstance, schedule: Mapping[str, tuple]) -> bool:
    """``schedule`` maps job id to (start, instance index)."""
    counts = dict(inst.devices)
    offline = set(inst.offline)
    spans = {}
    penalty = 0
    for jid, dev, length, deadline, imp in inst.jobs:
        start, idx = schedule.get(jid, (None, None))
        if start is None or idx is None:
            return False
        if not 1 <= idx <= counts[dev] or (dev, idx) in offline:
            return False
        end = start + length
        if start < 0 or end > inst.horizon:
            return False
        spans[jid] = (dev, idx, start, end)
        penalty += max(0, end - deadline) * imp
    ids = list(spans)
    for a in range(len(ids)):
        for b in range(a + 1, len(ids)):
            da, ia, sa, ea = spans[ids[a]]
            db, ib, sb, eb = spans[ids[b]]
            if (da, ia) == (db, ib) and sa < eb and sb < ea:
                return False
    for before, after in inst.precedences:
        if spans[after][2] < spans[before][3]:
            return False
    return penalty <= inst.max_penalty


def verify_rf(inst: RfInstance, moves) -> bool:
    """``moves`` lists (step, segment, direction) with steps 1..t, one each."""
    n, t = inst.n_segments, inst.t_moves
    if sorted(m[0] for m in moves) != list(range(1, t + 1)):
        return False
    chain = [(k, 0) for k in range(n + 1)]
    for _step, seg, d in sorted(moves):
        if not 1 <= seg <= n or d not in ("cw", "ccw"):
            return False
        cx, cy = chain[seg - 1]
        for k in range(seg, n + 1):
            x, y = chain[k]
            if d == "ccw":
                chain[k] = (cx - (y - cy), cy + (x - cx))
            else:
                chain[k] = (cx + (y - cy), cy - (x - cx))
        if len(set(chain)) != len(chain):
            return False
    return chain == [tuple(p) for p in inst.goal]


def verify(instance, assignments: Mapping[str, int], moves=None) -> bool:
    """Decode and check; malformed solutions count as failures."""
    try:
        decoded = decode(instance, assignments, moves)
    except DecodeError:
        return False
    if isinstance(instance, WseqInstance):
        return verify_wseq(instance, *decoded)
    if isinstance(instance, IsInstance):
        return verify_is(instance, decoded)
    return verify_rf(instance, decoded)
