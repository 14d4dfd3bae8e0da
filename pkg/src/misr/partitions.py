"""Randomized r-good partitions of the bounding box and their grid-aligned variant."""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Sequence

from .config import DEFAULT, Constants
from .fakes import FakeSet, is_valid_fake_set
from .geometry import Rect, intersects
from .instance import Instance
from .solvers import IndependentSet


class PartitionError(RuntimeError):
    pass


@dataclass(frozen=True)
class CellPartition:
    cells: tuple[Rect, ...]
    fake: tuple[bool, ...]
    counts: tuple[int, ...]  # N_P: OPT' rects meeting the closed cell
    r: int
    opt_size: int
    bbox: Rect

    def __len__(self):
        return len(self.cells)

    def excess(self, k: int) -> int:
        return self.r * self.counts[k] // self.opt_size if self.opt_size else 0

    def corner_points(self) -> set:
        return {c for cell in self.cells for c in cell.corners()}

    def to_json(self) -> dict:
        return {
            "r": self.r,
            "opt_size": self.opt_size,
            "cells": [
                {"rect": list(c.coords()), "fake": f, "n": n}
                for c, f, n in zip(self.cells, self.fake, self.counts)
            ],
        }


def count_hits(cell: Rect, opt_rects: Sequence[Rect]) -> int:
    return sum(intersects(r.as_open(), cell) for r in opt_rects)


def _ray_stop(x, y, up: bool, source: int, rects: Sequence[Rect], bbox: Rect):
    stop = bbox.y2 if up else bbox.y1
    for k, q in enumerate(rects):
        if k == source or not q.x1 <= x <= q.x2:
            continue
        if q.y1 <= y <= q.y2:
            return y  # starts on another boundary
        if up and q.y1 > y:
            stop = min(stop, q.y1)
        if not up and q.y2 < y:
            stop = max(stop, q.y2)
    return stop


class _UnionFind:
    def __init__(self):
        self.parent = {}

    def find(self, a):
        self.parent.setdefault(a, a)
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def _covered(segments: dict, line, lo, hi) -> bool:
    return any(a <= lo and hi <= b for a, b in segments.get(line, ()))


def cells_from_segments(xs, ys, vsegs: dict, hsegs: dict, bbox: Rect) -> list[Rect]:
    """Faces of an arrangement of axis-parallel segments inside bbox.

    vsegs maps an x to a list of (y_lo, y_hi) spans, hsegs likewise for y.
    """
    uf = _UnionFind()
    nx, ny = len(xs) - 1, len(ys) - 1
    for i in range(nx):
        for j in range(ny):
            uf.find((i, j))
            if i + 1 < nx and not _covered(vsegs, xs[i + 1], ys[j], ys[j + 1]):
                uf.union((i, j), (i + 1, j))
            if j + 1 < ny and not _covered(hsegs, ys[j + 1], xs[i], xs[i + 1]):
                uf.union((i, j), (i, j + 1))
    groups: dict = {}
    for i in range(nx):
        for j in range(ny):
            groups.setdefault(uf.find((i, j)), []).append((i, j))
    out = []
    for members in groups.values():
        i1 = min(i for i, _ in members)
        i2 = max(i for i, _ in members)
        j1 = min(j for _, j in members)
        j2 = max(j for _, j in members)
        if len(members) != (i2 - i1 + 1) * (j2 - j1 + 1):
            raise PartitionError("arrangement produced a non-rectangular face")
        out.append(Rect(xs[i1], ys[j1], xs[i2 + 1], ys[j2 + 1], True))
    return sorted(out)


def ray_shooting_partition(rects: Sequence[Rect], bbox: Rect) -> list[Rect]:
    """Cells cut out by the rect boundaries plus vertical corner rays.

    Top corners shoot up and bottom corners shoot down; a ray stops at the
    first boundary of another rect or at the box.
    """
    rects = [r.as_closed() for r in rects]
    xs = sorted({bbox.x1, bbox.x2} | {c for r in rects for c in (r.x1, r.x2)})
    ys = sorted({bbox.y1, bbox.y2} | {c for r in rects for c in (r.y1, r.y2)})
    vsegs: dict = {}
    hsegs: dict = {}
    for k, r in enumerate(rects):
        for x in (r.x1, r.x2):
            vsegs.setdefault(x, []).append((r.y1, r.y2))
            top = _ray_stop(x, r.y2, True, k, rects, bbox)
            if top > r.y2:
                vsegs[x].append((r.y2, top))
            bottom = _ray_stop(x, r.y1, False, k, rects, bbox)
            if bottom < r.y1:
                vsegs[x].append((bottom, r.y1))
        for y in (r.y1, r.y2):
            hsegs.setdefault(y, []).append((r.x1, r.x2))
    return cells_from_segments(xs, ys, vsegs, hsegs, bbox)


def subdivide_excess_cell(cell: Rect, opt_rects: Sequence[Rect], r: int, t: int) -> list[Rect]:
    """Cut a cell with excess t into at most t*t grid cells.

    The i-th vertical line sits at the ceil(i*N/t)-th smallest right edge
    among the OPT' rects meeting the cell; horizontal lines likewise.
    """
    hits = [q for q in opt_rects if intersects(q.as_open(), cell)]
    n = len(hits)

    def lines(ends, lo, hi):
        ends = sorted(ends)
        out = {lo, hi}
        for i in range(1, t):
            k = -(-i * n // t)
            v = min(max(ends[k - 1], lo), hi)
            out.add(v)
        return sorted(out)

    vs = lines([q.x2 for q in hits], cell.x1, cell.x2)
    hs = lines([q.y2 for q in hits], cell.y1, cell.y2)
    return [
        Rect(vs[a], hs[b], vs[a + 1], hs[b + 1], True)
        for a in range(len(vs) - 1)
        for b in range(len(hs) - 1)
    ]


def _finish(cells, f: FakeSet, opt_rects, r, bbox) -> CellPartition:
    fakes = set(f.rects)
    cells = sorted(cells)
    return CellPartition(
        cells=tuple(cells),
        fake=tuple(c in fakes for c in cells),
        counts=tuple(count_hits(c, opt_rects) for c in cells),
        r=r,
        opt_size=len(opt_rects),
        bbox=bbox,
    )


def r_good_failures(p: CellPartition, f: FakeSet, opt_rects: Sequence[Rect], r: int, max_cells: float) -> list[str]:
    """Names of the r-good clauses p violates (empty when p is r-good)."""
    bad = []
    if len(p.cells) > max_cells:
        bad.append(f"cell count {len(p.cells)} > {max_cells}")
    limit = 20 * len(opt_rects)
    for c in p.cells:
        if count_hits(c, opt_rects) * r > limit:
            bad.append(f"cell {c.coords()} meets too many OPT' rects")
            break
    cellset = set(p.cells)
    if any(q not in cellset for q in f.rects):
        bad.append("a fake rect is not a cell")
    if not is_tiling(p.cells, p.bbox):
        bad.append("cells do not tile the box")
    return bad


def is_tiling(cells: Sequence[Rect], bbox: Rect) -> bool:
    """Cells are internally disjoint, inside bbox and cover it (by area)."""
    if not all(bbox.contains(c) for c in cells):
        return False
    if sum(c.area for c in cells) != bbox.area:
        return False
    cs = sorted(cells)
    for a in range(len(cs)):
        for b in range(a + 1, len(cs)):
            if cs[b].x1 >= cs[a].x2:
                break
            if cs[a].x1 < cs[b].x2 and cs[b].x1 < cs[a].x2 and cs[a].y1 < cs[b].y2 and cs[b].y1 < cs[a].y2:
                return False
    return True


def _check_pre(f: FakeSet, opt_size: int, r: int, cfg: Constants, divisor: int):
    if not is_valid_fake_set(f):
        raise PartitionError("invalid fake set")
    if r < max(len(f), 3):
        raise PartitionError(f"r={r} below max(|F|, 3)")
    if cfg.strict and r * divisor > opt_size:
        raise PartitionError(f"r={r} above |OPT'|/{divisor}")


def _one_build(inst: Instance, f: FakeSet, opt_rects, r, rng: random.Random) -> list[Rect]:
    m = len(opt_rects)
    p = min(1.0, r / m) if m else 0.0
    s1 = [q for q in opt_rects if rng.random() < p]
    s2 = [q for q in opt_rects if rng.random() < p]
    w = list(f.rects) + sorted(set(s1) | set(s2))
    cells = ray_shooting_partition(w, inst.bbox)
    fakes = set(f.rects)
    out = []
    for c in cells:
        t = r * count_hits(c, opt_rects) // m if m else 0
        if c not in fakes and t >= 10:
            out.extend(subdivide_excess_cell(c, opt_rects, r, t))
        else:
            out.append(c)
    return out


def build_r_good_partition(
    inst: Instance,
    f: FakeSet,
    opt_prime: IndependentSet,
    r: int,
    seed: int = 0,
    cfg: Constants = DEFAULT,
) -> CellPartition:
    """Sample OPT' twice, shoot rays, subdivide heavy cells; retry on failure."""
    opt_rects = [inst.rects[i] for i in opt_prime.indices]
    _check_pre(f, len(opt_rects), r, cfg, 2)
    seen = []
    for attempt in range(cfg.retries):
        rng = random.Random(f"rgood:{seed}:{attempt}")
        p = _finish(_one_build(inst, f, opt_rects, r, rng), f, opt_rects, r, inst.bbox)
        bad = r_good_failures(p, f, opt_rects, r, cfg.c_star * r)
        if not bad:
            return p
        seen.append((len(p.cells), bad[0]))
    raise PartitionError(f"no r-good partition in {cfg.retries} tries: {seen[:5]}")


# -- grid-aligned variant ----------------------------------------------------------

def _split_at(cell: Rect, lines: Sequence[int], vertical: bool) -> list[Rect]:
    """Cut a cell spanning several strips at its extreme grid lines."""
    lo, hi = (cell.x1, cell.x2) if vertical else (cell.y1, cell.y2)
    if not any(lo < v < hi for v in lines):
        return [cell]
    meet = [v for v in lines if lo <= v <= hi]
    cuts = sorted({lo, meet[0], meet[-1], hi})
    out = []
    for a, b in zip(cuts, cuts[1:]):
        if vertical:
            out.append(Rect(a, cell.y1, b, cell.y2, True))
        else:
            out.append(Rect(cell.x1, a, cell.x2, b, True))
    return out


def _in_strip(lo, hi, lines) -> bool:
    return not any(lo < v < hi for v in lines)


def align_partition_to_grid(cells: Sequence[Rect], fakes: set, vlines, hlines) -> list[Rect]:
    """Turn any partition into one whose cells are all grid-aligned."""
    split = []
    for c in cells:
        for part in _split_at(c, vlines, True):
            split.extend(_split_at(part, hlines, False))
    nx, ny = len(vlines) - 1, len(hlines) - 1
    marked = [[False] * ny for _ in range(nx)]
    out = []
    small = []

    def grid_range(lo, hi, lines):
        return [k for k in range(len(lines) - 1) if lo <= lines[k] and lines[k + 1] <= hi]

    for c in split:
        vstrip = _in_strip(c.x1, c.x2, vlines)
        hstrip = _in_strip(c.y1, c.y2, hlines)
        if c in fakes or not (vstrip or hstrip):
            out.append(c)
            for i in grid_range(c.x1, c.x2, vlines):
                for j in grid_range(c.y1, c.y2, hlines):
                    marked[i][j] = True
        else:
            small.append(c)

    def gcell(i, j):
        return Rect(vlines[i], hlines[j], vlines[i + 1], hlines[j + 1], True)

    corners = {q for c in split for q in c.corners()}
    for i in range(nx):
        for j in range(ny):
            if marked[i][j]:
                continue
            g = gcell(i, j)
            if any(g.x1 <= x <= g.x2 and g.y1 <= y <= g.y2 for x, y in corners):
                out.append(g)
                marked[i][j] = True
    kind = {}
    for i in range(nx):
        for j in range(ny):
            if marked[i][j]:
                continue
            g = gcell(i, j)
            meets = [c for c in small if intersects(c.as_open(), g)]
            vertical = any(vlines[i] <= c.x1 and c.x2 <= vlines[i + 1] for c in meets)
            kind[i, j] = "v" if vertical else "h"
    for i in range(nx):
        j = 0
        while j < ny:
            if kind.get((i, j)) == "v" and not marked[i][j]:
                k = j
                while k < ny and kind.get((i, k)) == "v" and not marked[i][k]:
                    marked[i][k] = True
                    k += 1
                out.append(Rect(vlines[i], hlines[j], vlines[i + 1], hlines[k], True))
                j = k
            else:
                j += 1
    for j in range(ny):
        i = 0
        while i < nx:
            if kind.get((i, j)) == "h" and not marked[i][j]:
                k = i
                while k < nx and kind.get((k, j)) == "h" and not marked[k][j]:
                    marked[k][j] = True
                    k += 1
                out.append(Rect(vlines[i], hlines[j], vlines[k], hlines[j + 1], True))
                i = k
            else:
                i += 1
    return sorted(out)


def build_grid_aligned_r_good(
    inst: Instance,
    f: FakeSet,
    opt_prime: IndependentSet,
    r: int,
    g,
    seed: int = 0,
    cfg: Constants = DEFAULT,
) -> CellPartition:
    """An 8r-good partition pushed onto the lines of grid g."""
    opt_rects = [inst.rects[i] for i in opt_prime.indices]
    _check_pre(f, len(opt_rects), r, cfg, 16)
    if cfg.strict and r > g.rho:
        raise PartitionError("r exceeds the grid accuracy")
    vset, hset = set(g.vlines), set(g.hlines)
    if not all(q.x1 in vset and q.x2 in vset and q.y1 in hset and q.y2 in hset for q in f.rects):
        raise PartitionError("fake rects are not aligned with the grid")
    r8 = 8 * r
    fakes = set(f.rects)
    seen = []
    for attempt in range(cfg.retries):
        rng = random.Random(f"aligned:{seed}:{attempt}")
        base = _one_build(inst, f, opt_rects, r8, rng)
        cells = align_partition_to_grid(base, fakes, g.vlines, g.hlines)
        p = _finish(cells, f, opt_rects, r, inst.bbox)
        bad = r_good_failures(p, f, opt_rects, r, cfg.c_star_aligned * r)
        if not all(q.x1 in vset and q.x2 in vset and q.y1 in hset and q.y2 in hset for q in p.cells):
            bad.append("cell not aligned with the grid")
        if not bad:
            return p
        seen.append((len(p.cells), bad[0]))
    raise PartitionError(f"no grid-aligned r-good partition in {cfg.retries} tries: {seen[:5]}")
