"""Reverse folding: reach a goal chain shape in exactly ``t`` pivot moves.

The chain has vertices ``0..n``, starting straight along the x axis. Pivoting
segment ``i`` (from vertex ``i-1`` to vertex ``i``) rotates every vertex
``k >= i`` by 90 degrees about vertex ``i-1``. After each move the chain must
not touch itself.

Both encodings track segment directions instead of rotating coordinates
around a centre: a pivot of segment ``i`` turns the direction of every
segment ``k >= i`` by the same quarter turn, which is the same motion.
"""
from __future__ import annotations

import random
from dataclasses import dataclass

from ..program import Program, ProgramBuilder
from .common import Encoding, check_encoding, cx, exactly_one, require, tie

MAX_SEGMENTS = 8
MAX_MOVES = 5
DIRECTIONS = ("ccw", "cw")
# unit vectors, listed counter-clockwise
HEADINGS = {"e": (1, 0), "n": (0, 1), "w": (-1, 0), "s": (0, -1)}
_ORDER = ("e", "n", "w", "s")


def turn(heading: str, direction: str) -> str:
    step = 1 if direction == "ccw" else -1
    return _ORDER[(_ORDER.index(heading) + step) % 4]


@dataclass(frozen=True)
class RfInstance:
    n_segments: int
    t_moves: int
    goal: tuple  # n_segments + 1 points

    def __post_init__(self):
        if self.n_segments < 1 or self.t_moves < 0:
            raise ValueError("need at least one segment and a non-negative move count")
        if len(self.goal) != self.n_segments + 1:
            raise ValueError("goal must list n_segments + 1 vertices")
        for (x0, y0), (x1, y1) in zip(self.goal, self.goal[1:]):
            if abs(x1 - x0) + abs(y1 - y0) != 1:
                raise ValueError("goal vertices must be joined by unit axis segments")
        if len(set(self.goal)) != len(self.goal):
            raise ValueError("goal chain touches itself")

    def to_dict(self) -> dict:
        return {"domain": "rf", "n_segments": self.n_segments, "t_moves": self.t_moves,
                "goal": [list(p) for p in self.goal]}

    @classmethod
    def from_dict(cls, d: dict) -> "RfInstance":
        return cls(d["n_segments"], d["t_moves"], tuple(tuple(p) for p in d["goal"]))

    def goal_headings(self) -> list:
        out = []
        for (x0, y0), (x1, y1) in zip(self.goal, self.goal[1:]):
            out.append(next(h for h, v in HEADINGS.items() if v == (x1 - x0, y1 - y0)))
        return out


def _pivot(points, i, d):
    cx_, cy_ = points[i - 1]
    out = list(points[:i])
    for x, y in points[i:]:
        if d == "ccw":
            out.append((cx_ - (y - cy_), cy_ + (x - cx_)))
        else:
            out.append((cx_ + (y - cy_), cy_ - (x - cx_)))
    return out


def gen_rf(n: int, t: int, seed: int) -> RfInstance:
    if not 1 <= n <= MAX_SEGMENTS:
        raise ValueError(f"segment count must be in [1, {MAX_SEGMENTS}], got {n}")
    if not 0 <= t <= MAX_MOVES:
        raise ValueError(f"move count must be in [0, {MAX_MOVES}], got {t}")
    rng = random.Random(f"rf-{n}-{t}-{seed}")
    points = [(k, 0) for k in range(n + 1)]
    for _ in range(t):
        moves = [(i, d) for i in range(1, n + 1) for d in DIRECTIONS]
        rng.shuffle(moves)
        for i, d in moves:
            nxt = _pivot(points, i, d)
            if len(set(nxt)) == len(nxt):
                points = nxt
                break
    return RfInstance(n, t, tuple(points))


def _collision_pairs(n):
    # vertices an odd number of steps apart can never share a grid point
    return [(a, b) for a in range(n + 1) for b in range(a + 2, n + 1, 2)]


def _moves(b: ProgramBuilder, inst: RfInstance) -> None:
    n = inst.n_segments
    for s in range(1, inst.t_moves + 1):
        exactly_one(b, [f"pivot({s},{i},{d})" for i in range(1, n + 1) for d in DIRECTIONS],
                    f"moved({s})")
        for k in range(1, n + 1):
            for d in DIRECTIONS:
                for i in range(1, k + 1):
                    b.rule(f"rot({s},{k},{d})", pos=[f"pivot({s},{i},{d})"])


def _headings(b: ProgramBuilder, inst: RfInstance) -> None:
    """Moves, the heading of every segment after every move, and the goal headings."""
    n, t = inst.n_segments, inst.t_moves
    _moves(b, inst)
    for k in range(1, n + 1):
        b.fact(f"segdir(0,{k},e)")
    for s in range(1, t + 1):
        for k in range(1, n + 1):
            for h in _ORDER:
                prev = f"segdir({s - 1},{k},{h})"
                b.rule(f"segdir({s},{k},{h})", pos=[prev],
                       neg=[f"rot({s},{k},ccw)", f"rot({s},{k},cw)"])
                for d in DIRECTIONS:
                    b.rule(f"segdir({s},{k},{turn(h, d)})", pos=[prev, f"rot({s},{k},{d})"])
    if inst.goal[0] != (0, 0):
        b.constraint()  # the anchor vertex never moves
    for k, h in enumerate(inst.goal_headings(), start=1):
        b.constraint(neg=[f"segdir({t},{k},{h})"])


def _encode_pure_asp(inst: RfInstance) -> Program:
    b = ProgramBuilder()
    n, t = inst.n_segments, inst.t_moves
    _headings(b, inst)
    for s in range(1, t + 1):
        b.fact(f"tfoldx({s},0,0)")
        b.fact(f"tfoldy({s},0,0)")
        for k in range(1, n + 1):
            for v in range(-(k - 1), k):
                for h, (dx, dy) in HEADINGS.items():
                    step = f"segdir({s},{k},{h})"
                    b.rule(f"tfoldx({s},{k},{v + dx})", pos=[f"tfoldx({s},{k - 1},{v})", step])
                    b.rule(f"tfoldy({s},{k},{v + dy})", pos=[f"tfoldy({s},{k - 1},{v})", step])
        for a, c in _collision_pairs(n):
            for x in range(-n, n + 1):
                for y in range(-n, n + 1):
                    if abs(x) + abs(y) > a:
                        continue
                    b.constraint(pos=[f"tfoldx({s},{a},{x})", f"tfoldy({s},{a},{y})",
                                      f"tfoldx({s},{c},{x})", f"tfoldy({s},{c},{y})"])
    return b.build()


def _encode_true_casp(inst: RfInstance) -> Program:
    """Moves and headings stay in the program; vertex coordinates and the
    no-overlap test are constraints over integer variables."""
    b = ProgramBuilder()
    n, t = inst.n_segments, inst.t_moves
    base = 2 * n + 1
    for s in range(1, t + 1):
        for k in range(n + 1):
            b.declare(f"x({s},{k})", -k, k)
            b.declare(f"y({s},{k})", -k, k)
    _headings(b, inst)
    for s in range(1, t + 1):
        for k in range(1, n + 1):
            # every step atom is tied to the headings that imply it, so the
            # program leaves no constraint atom undetermined
            for axis, index in (("x", 0), ("y", 1)):
                for v in (-1, 0, 1):
                    step = f"{axis}step({s},{k},{v})"
                    for h, delta in HEADINGS.items():
                        if delta[index] == v:
                            b.rule(step, pos=[f"segdir({s},{k},{h})"])
                    tie(b, step, cx(f"{axis}({s},{k})", "=", [f"{axis}({s},{k - 1})", v]))
        # two vertices overlap exactly when this weighted difference is zero
        for a, c in _collision_pairs(n):
            require(b, cx([(base, f"x({s},{a})"), f"y({s},{a})",
                           (-base, f"x({s},{c})"), (-1, f"y({s},{c})")], "!=", 0))
    return b.build()


def encode_rf(inst: RfInstance, encoding) -> Program:
    enc = check_encoding("rf", encoding)
    if enc is Encoding.PURE_ASP:
        return _encode_pure_asp(inst)
    return _encode_true_casp(inst)
