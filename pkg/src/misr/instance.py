"""MISR instances: canonical form, kernels, generators and JSON I/O."""

from __future__ import annotations

import json
import random
from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from math import isqrt
from pathlib import Path
from typing import Iterable, Sequence

from .geometry import Rect, interiors_overlap


@dataclass(frozen=True)
class Instance:
    rects: tuple[Rect, ...]
    bbox: Rect

    @property
    def n(self) -> int:
        return len(self.rects)

    def is_canonical(self) -> bool:
        n = self.n
        if self.bbox.coords() != (0, 0, 2 * n + 1, 2 * n + 1):
            return False
        want = set(range(1, 2 * n + 1))
        xs = [c for r in self.rects for c in (r.x1, r.x2)]
        ys = [c for r in self.rects for c in (r.y1, r.y2)]
        return set(xs) == want and set(ys) == want and len(xs) == len(set(xs)) == 2 * n

    def adjacency(self) -> list[list[bool]]:
        rs = self.rects
        return [[i != j and interiors_overlap(a, b) for j, b in enumerate(rs)] for i, a in enumerate(rs)]

    def to_json(self) -> dict:
        return {"n": self.n, "rects": [r.to_json() for r in self.rects]}


@dataclass(frozen=True)
class SolutionLift:
    """Maps each rect of a derived instance to one or more source indices."""

    mapping: tuple[tuple[int, ...], ...]

    @classmethod
    def identity(cls, n: int) -> "SolutionLift":
        return cls(tuple((i,) for i in range(n)))

    def lift(self, indices: Iterable[int]) -> tuple[int, ...]:
        return tuple(sorted(self.mapping[i][0] for i in indices))

    def compose(self, inner: "SolutionLift") -> "SolutionLift":
        """inner maps a further-derived instance into the one self maps from."""
        return SolutionLift(tuple(tuple(self.mapping[k][0] for k in group) for group in inner.mapping))


def _compress(lo_hi: list[tuple], n: int) -> list[tuple[int, int]]:
    # right/top sides sort before left/bottom at equal coordinates so that
    # touching rectangles stay touching-but-disjoint after the tie break
    events = []
    for idx, (lo, hi) in enumerate(lo_hi):
        events.append((lo, 1, idx, 0))
        events.append((hi, 0, idx, 1))
    events.sort()
    out = [[0, 0] for _ in range(n)]
    for rank, (_, _, idx, side) in enumerate(events, start=1):
        out[idx][side] = rank
    return [tuple(p) for p in out]


def canonicalize(raw: Sequence) -> tuple[Instance, SolutionLift]:
    """Rank-compress coordinates to 1..2n with ties broken symbolically.

    Accepts Rects or plain (x1, y1, x2, y2) tuples.
    """
    raw = [r if isinstance(r, Rect) else _raw_rect(*r) for r in raw]
    n = len(raw)
    xs = _compress([(r.x1, r.x2) for r in raw], n)
    ys = _compress([(r.y1, r.y2) for r in raw], n)
    rects = tuple(Rect(xs[i][0], ys[i][0], xs[i][1], ys[i][1]) for i in range(n))
    return Instance(rects, Rect(0, 0, 2 * n + 1, 2 * n + 1, True)), SolutionLift.identity(n)


def _raw_rect(x1, y1, x2, y2) -> Rect:
    if not (x1 < x2 and y1 < y2):
        raise ValueError(f"zero-area rectangle {(x1, y1, x2, y2)}")
    return Rect(x1, y1, x2, y2)


def greedy_interval_mis(intervals: Sequence[tuple[int, int]]) -> list[int]:
    """Maximum set of pairwise disjoint open intervals, earliest end first."""
    order = sorted(range(len(intervals)), key=lambda i: (intervals[i][1], -intervals[i][0], i))
    chosen, last = [], None
    for i in order:
        lo, hi = intervals[i]
        if last is None or lo >= last:
            chosen.append(i)
            last = hi
    return chosen


def _maximal_with_swaps(intervals: Sequence[tuple[int, int]]) -> list[int]:
    """Greedy maximal independent intervals, then swap out any chosen interval
    that strictly contains another input interval until none does."""
    chosen = set(greedy_interval_mis(intervals))
    changed = True
    while changed:
        changed = False
        for c in sorted(chosen):
            lo, hi = intervals[c]
            for k, (a, b) in enumerate(intervals):
                if k != c and lo <= a and b <= hi and (a, b) != (lo, hi):
                    chosen.discard(c)
                    chosen.add(k)
                    changed = True
                    break
            if changed:
                break
    return sorted(chosen)


def _kernel_lines(intervals: Sequence[tuple[int, int]], lo: int, hi: int) -> list[int]:
    lines = {lo, hi}
    for k in _maximal_with_swaps(intervals):
        a, b = intervals[k]
        lines.update((a, b))
        if b - a >= 2:
            lines.add(a + 1)
    return sorted(lines)


def _round_out(lines: list[int], a: int, b: int) -> tuple[int, int]:
    return lines[bisect_right(lines, a) - 1], lines[bisect_left(lines, b)]


def kernelize(inst: Instance) -> tuple[Instance, SolutionLift]:
    """Round every rect outward to lines derived from maximal interval sets.

    The output keeps one copy of each distinct rounded rect; the lift
    records every source index that rounded onto it.
    """
    b = inst.bbox
    vlines = _kernel_lines([(r.x1, r.x2) for r in inst.rects], b.x1, b.x2)
    hlines = _kernel_lines([(r.y1, r.y2) for r in inst.rects], b.y1, b.y2)
    groups: dict[tuple, list[int]] = {}
    for i, r in enumerate(inst.rects):
        x1, x2 = _round_out(vlines, r.x1, r.x2)
        y1, y2 = _round_out(hlines, r.y1, r.y2)
        groups.setdefault((x1, y1, x2, y2), []).append(i)
    keys = sorted(groups, key=lambda k: groups[k][0])
    rects = tuple(Rect(*k) for k in keys)
    return Instance(rects, b), SolutionLift(tuple(tuple(groups[k]) for k in keys))


# -- generators ---------------------------------------------------------------

KINDS = ("uniform-random", "disjoint-grid", "nested-stacks", "adversarial-strips")


def _uniform(n, rng):
    out = []
    for _ in range(n):
        x1, x2 = sorted(rng.sample(range(4 * n + 4), 2))
        y1, y2 = sorted(rng.sample(range(4 * n + 4), 2))
        out.append(Rect(x1, y1, x2, y2))
    return out


def _disjoint_grid(n, rng):
    side = isqrt(n)
    if side * side != n:
        side += 1
    out = []
    for k in range(n):
        i, j = divmod(k, side)
        out.append(Rect(10 * i + 1, 10 * j + 1, 10 * i + 9, 10 * j + 9))
    return out


def _nested(n, rng):
    # every rect contains the common centre point, so all pairs intersect
    out = []
    for k in range(n):
        out.append(Rect(-k - 1 - rng.random(), -k - 1 - rng.random(), k + 1 + rng.random(), k + 1 + rng.random()))
    return out


def _strips(n, rng):
    # long thin strips in both directions crossing each other
    out = []
    for k in range(n):
        off = k + rng.random() * 0.5
        if k % 2:
            out.append(Rect(0, off, 4 * n, off + 0.3))
        else:
            out.append(Rect(off, 0, off + 0.3, 4 * n))
    return out


def generate(kind: str, n: int, seed: int) -> Instance:
    if n < 1:
        raise ValueError("n must be positive")
    makers = {
        "uniform-random": _uniform,
        "disjoint-grid": _disjoint_grid,
        "nested-stacks": _nested,
        "adversarial-strips": _strips,
    }
    if kind not in makers:
        raise ValueError(f"unknown generator kind {kind!r}")
    rng = random.Random(f"{kind}:{n}:{seed}")
    inst, _ = canonicalize(makers[kind](n, rng))
    return inst


# -- JSON ---------------------------------------------------------------------

def instance_from_json(data: dict) -> Instance:
    rects = [Rect(r["x1"], r["y1"], r["x2"], r["y2"]) for r in data["rects"]]
    if "n" in data and data["n"] != len(rects):
        raise ValueError("n does not match the number of rects")
    ints = all(isinstance(v, int) for r in rects for v in r.coords())
    if ints:
        n = len(rects)
        inst = Instance(tuple(rects), Rect(0, 0, 2 * n + 1, 2 * n + 1, True))
        if inst.is_canonical():
            return inst
    inst, _ = canonicalize(rects)
    return inst


def load_instance(path) -> Instance:
    return instance_from_json(json.loads(Path(path).read_text()))


def dump_json(obj, path=None) -> str:
    text = json.dumps(obj, sort_keys=True, indent=1) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text
