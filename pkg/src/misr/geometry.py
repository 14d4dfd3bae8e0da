"""Axis-parallel primitives, rectilinear polygons and rectangle tilings."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, NamedTuple


class Point(NamedTuple):
    x: int
    y: int


@dataclass(frozen=True, order=True)
class Rect:
    """Axis-parallel rectangle. Input rectangles are open, fake ones closed."""

    x1: int
    y1: int
    x2: int
    y2: int
    closed: bool = False

    def __post_init__(self):
        if not (self.x1 < self.x2 and self.y1 < self.y2):
            raise ValueError(f"degenerate rectangle {self.coords()}")

    def coords(self) -> tuple:
        return (self.x1, self.y1, self.x2, self.y2)

    @property
    def area(self):
        return (self.x2 - self.x1) * (self.y2 - self.y1)

    def corners(self) -> tuple[Point, ...]:
        return (
            Point(self.x1, self.y1),
            Point(self.x2, self.y1),
            Point(self.x2, self.y2),
            Point(self.x1, self.y2),
        )

    def as_closed(self) -> "Rect":
        return Rect(self.x1, self.y1, self.x2, self.y2, True)

    def as_open(self) -> "Rect":
        return Rect(self.x1, self.y1, self.x2, self.y2, False)

    def contains(self, other: "Rect") -> bool:
        """Closure containment, the test used for open-inside-closed."""
        return (
            self.x1 <= other.x1
            and other.x2 <= self.x2
            and self.y1 <= other.y1
            and other.y2 <= self.y2
        )

    def contains_point(self, x, y) -> bool:
        if self.closed:
            return self.x1 <= x <= self.x2 and self.y1 <= y <= self.y2
        return self.x1 < x < self.x2 and self.y1 < y < self.y2

    def to_json(self) -> dict:
        return {"x1": self.x1, "y1": self.y1, "x2": self.x2, "y2": self.y2}


def intersects(a: Rect, b: Rect) -> bool:
    """True iff the point sets share a point, given each rect's openness."""
    if a.closed and b.closed:
        return a.x1 <= b.x2 and b.x1 <= a.x2 and a.y1 <= b.y2 and b.y1 <= a.y2
    # one open side is enough to need a strict overlap on both axes
    return a.x1 < b.x2 and b.x1 < a.x2 and a.y1 < b.y2 and b.y1 < a.y2


def interiors_overlap(a: Rect, b: Rect) -> bool:
    return a.x1 < b.x2 and b.x1 < a.x2 and a.y1 < b.y2 and b.y1 < a.y2


@dataclass(frozen=True)
class AlignmentPointSet:
    xs: tuple
    ys: tuple

    def __post_init__(self):
        object.__setattr__(self, "xs", tuple(sorted(set(self.xs))))
        object.__setattr__(self, "ys", tuple(sorted(set(self.ys))))

    @classmethod
    def from_points(cls, pts: Iterable) -> "AlignmentPointSet":
        pts = list(pts)
        return cls(tuple(p[0] for p in pts), tuple(p[1] for p in pts))

    @classmethod
    def from_rects(cls, rects: Iterable[Rect]) -> "AlignmentPointSet":
        return cls.from_points(c for r in rects for c in r.corners())


def _corner_list(obj) -> tuple:
    if isinstance(obj, Rect):
        return obj.corners()
    return obj.corners


def is_aligned(obj, z: AlignmentPointSet) -> bool:
    xs, ys = set(z.xs), set(z.ys)
    return all(p[0] in xs and p[1] in ys for p in _corner_list(obj))


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _clean(points: list) -> list:
    """Drop repeated and collinear corners until the walk is stable."""
    pts = [Point(*p) for p in points]
    changed = True
    while changed and len(pts) >= 3:
        changed = False
        out = []
        for p in pts:
            if not out or out[-1] != p:
                out.append(p)
        if len(out) > 1 and out[0] == out[-1]:
            out.pop()
        pts = out
        n = len(pts)
        for i in range(n):
            a, b, c = pts[i - 1], pts[i], pts[(i + 1) % n]
            if _cross(a, b, c) == 0:
                del pts[i]
                changed = True
                break
    return pts


def _signed_area2(pts) -> int:
    s = 0
    n = len(pts)
    for i in range(n):
        x0, y0 = pts[i]
        x1, y1 = pts[(i + 1) % n]
        s += x0 * y1 - x1 * y0
    return s


def _segments_touch(p, q, r, s) -> bool:
    """Closed axis-parallel segments pq and rs share a point."""
    ax1, ax2 = sorted((p[0], q[0]))
    ay1, ay2 = sorted((p[1], q[1]))
    bx1, bx2 = sorted((r[0], s[0]))
    by1, by2 = sorted((r[1], s[1]))
    return ax1 <= bx2 and bx1 <= ax2 and ay1 <= by2 and by1 <= ay2


class RectilinearPolygon:
    """Simple rectilinear polygon stored as a counter-clockwise corner walk."""

    def __init__(self, corners: Iterable, closed: bool = True):
        pts = [Point(*c) for c in corners]
        if len(pts) < 4 or len(pts) % 2:
            raise ValueError("a rectilinear polygon needs an even number >= 4 of corners")
        n = len(pts)
        for i in range(n):
            a, b, c = pts[i - 1], pts[i], pts[(i + 1) % n]
            if a == b:
                raise ValueError("repeated corner")
            horiz_in = a[1] == b[1]
            horiz_out = b[1] == c[1]
            if not (horiz_in or a[0] == b[0]):
                raise ValueError("edge is not axis-parallel")
            if horiz_in == horiz_out:
                raise ValueError("edges must alternate between horizontal and vertical")
        for i in range(n):
            for j in range(i + 1, n):
                if j == i + 1 or (i == 0 and j == n - 1):
                    continue
                if _segments_touch(pts[i], pts[(i + 1) % n], pts[j], pts[(j + 1) % n]):
                    raise ValueError("boundary is not a simple closed curve")
        if _signed_area2(pts) < 0:
            pts.reverse()
        self.corners = tuple(pts)
        self.closed = closed

    def __len__(self):
        return len(self.corners)

    def __repr__(self):
        return f"RectilinearPolygon({list(self.corners)})"

    @property
    def area(self):
        return _signed_area2(self.corners) // 2

    def bbox(self) -> Rect:
        xs = [p.x for p in self.corners]
        ys = [p.y for p in self.corners]
        return Rect(min(xs), min(ys), max(xs), max(ys), True)

    def contains_point(self, x, y) -> bool:
        """Crossing-number test. Callers sample points off the boundary."""
        inside = False
        pts = self.corners
        n = len(pts)
        for i in range(n):
            (x0, y0), (x1, y1) = pts[i], pts[(i + 1) % n]
            if x0 != x1:
                continue
            lo, hi = sorted((y0, y1))
            if lo <= y < hi and x0 > x:
                inside = not inside
        return inside

    def alignment_set(self) -> AlignmentPointSet:
        return AlignmentPointSet.from_points(self.corners)


def polygon_from_rect(r: Rect) -> RectilinearPolygon:
    return RectilinearPolygon(r.corners())


def _ray_hit(pts, i, downward):
    px, py = pts[i]
    n = len(pts)
    best = None
    for k in range(n):
        a, b = pts[k], pts[(k + 1) % n]
        if a[1] != b[1]:
            continue
        lo, hi = sorted((a[0], b[0]))
        if not lo <= px <= hi:
            continue
        y = a[1]
        if downward and y < py and (best is None or y > best[1]):
            best = (k, y)
        if not downward and y > py and (best is None or y < best[1]):
            best = (k, y)
    return best


def tile_polygon(p: RectilinearPolygon) -> list[Rect]:
    """Cut a simple rectilinear polygon into at most L-3 closed rectangles.

    Repeatedly picks the lexicographically smallest reflex corner and
    extends its vertical edge through the interior until the boundary.
    """
    out: list[Rect] = []
    stack = [list(p.corners)]
    while stack:
        pts = stack.pop()
        n = len(pts)
        if n == 4:
            xs = [q[0] for q in pts]
            ys = [q[1] for q in pts]
            out.append(Rect(min(xs), min(ys), max(xs), max(ys), True))
            continue
        reflex = [i for i in range(n) if _cross(pts[i - 1], pts[i], pts[(i + 1) % n]) < 0]
        i = min(reflex, key=lambda k: pts[k])
        prev, nxt = pts[i - 1], pts[(i + 1) % n]
        other = prev if prev[0] == pts[i][0] else nxt
        downward = other[1] > pts[i][1]
        j, y = _ray_hit(pts, i, downward)
        hit = Point(pts[i][0], y)
        # walk c[i] .. c[j], hit   and   hit, c[j+1] .. c[i]
        first = [pts[(i + k) % n] for k in range((j - i) % n + 1)] + [hit]
        second = [hit] + [pts[(j + 1 + k) % n] for k in range((i - j - 1) % n + 1)]
        for part in (first, second):
            stack.append(_clean(part))
    return sorted(out)


def _touches_boundary(p: RectilinearPolygon, b: Rect) -> bool:
    for q in p.corners:
        if q.x in (b.x1, b.x2) or q.y in (b.y1, b.y2):
            return True
    return False


def tile_complement(p: RectilinearPolygon, b: Rect) -> list[Rect]:
    """Tile b minus the polygon p with at most L+2 closed rectangles."""
    bb = p.bbox()
    if not b.contains(bb):
        raise ValueError("polygon is not inside the bounding box")
    if len(p) == 4 and bb.coords() == b.coords():
        return []
    if _touches_boundary(p, b):
        xs = sorted({q.x for q in p.corners} | {b.x1, b.x2})
        ys = sorted({q.y for q in p.corners} | {b.y1, b.y2})
        cells = set()
        for i in range(len(xs) - 1):
            for j in range(len(ys) - 1):
                cx2, cy2 = xs[i] + xs[i + 1], ys[j] + ys[j + 1]
                # doubled coordinates keep the sample point integral
                if not _contains_doubled(p, cx2, cy2):
                    cells.add((i, j))
        return tile_cells(xs, ys, cells)
    pts = p.corners
    n = len(pts)
    k = min(
        (i for i in range(n) if pts[i].x == pts[(i + 1) % n].x),
        key=lambda i: (pts[i].x, pts[(i + 1) % n].y),
    )
    top, bottom = pts[k], pts[(k + 1) % n]
    xe, ya, yb = top.x, bottom.y, top.y
    walk = [
        (b.x1, ya), (b.x1, b.y1), (b.x2, b.y1), (b.x2, b.y2), (b.x1, b.y2), (b.x1, yb),
    ]
    walk += [pts[(k - m) % n] for m in range(n)]
    out = tile_polygon(RectilinearPolygon(_clean(walk)))
    out.append(Rect(b.x1, ya, xe, yb, True))
    return sorted(out)


def _contains_doubled(p: RectilinearPolygon, x2, y2) -> bool:
    inside = False
    pts = p.corners
    n = len(pts)
    for i in range(n):
        (x0, y0), (x1, y1) = pts[i], pts[(i + 1) % n]
        if x0 != x1:
            continue
        lo, hi = sorted((2 * y0, 2 * y1))
        if lo <= y2 < hi and 2 * x0 > x2:
            inside = not inside
    return inside


def _components(cells: set) -> list[set]:
    seen, comps = set(), []
    for c in sorted(cells):
        if c in seen:
            continue
        comp, todo = set(), [c]
        seen.add(c)
        while todo:
            i, j = todo.pop()
            comp.add((i, j))
            for nb in ((i + 1, j), (i - 1, j), (i, j + 1), (i, j - 1)):
                if nb in cells and nb not in seen:
                    seen.add(nb)
                    todo.append(nb)
        comps.append(comp)
    return comps


def trace_outline(xs, ys, cells: set):
    """Outline of a 4-connected cell set as one CCW corner walk.

    Returns None when the set has a hole or a pinch point, since then
    no single simple walk describes it.
    """
    out_edges = defaultdict(list)
    count = 0
    for i, j in cells:
        sides = (
            ((i, j - 1), (i, j), (i + 1, j)),
            ((i + 1, j), (i + 1, j), (i + 1, j + 1)),
            ((i, j + 1), (i + 1, j + 1), (i, j + 1)),
            ((i - 1, j), (i, j + 1), (i, j)),
        )
        for nb, a, bq in sides:
            if nb not in cells:
                out_edges[a].append(bq)
                count += 1
    if any(len(v) > 1 for v in out_edges.values()):
        return None
    start = min(out_edges)
    walk, cur = [start], out_edges[start][0]
    while cur != start:
        walk.append(cur)
        cur = out_edges[cur][0]
    if len(walk) != count:
        return None
    return _clean([(xs[a], ys[c]) for a, c in walk])


def _slab_tiling(xs, ys, cells: set) -> list[Rect]:
    runs_by_col = []
    for i in range(len(xs) - 1):
        col = sorted(j for (a, j) in cells if a == i)
        runs = []
        for j in col:
            if runs and runs[-1][1] == j:
                runs[-1][1] = j + 1
            else:
                runs.append([j, j + 1])
        runs_by_col.append({(lo, hi) for lo, hi in runs})
    out = []
    open_runs: dict = {}
    for i, runs in enumerate(runs_by_col + [set()]):
        for run in list(open_runs):
            if run not in runs:
                lo, hi = run
                out.append(Rect(xs[open_runs.pop(run)], ys[lo], xs[i], ys[hi], True))
        for run in runs:
            open_runs.setdefault(run, i)
    return sorted(out)


def tile_cells(xs, ys, cells: set) -> list[Rect]:
    """Tile a union of overlay-grid cells with closed rectangles.

    Simple components go through tile_polygon. Components with holes or
    pinches use merged vertical slabs.
    """
    out = []
    for comp in _components(set(cells)):
        walk = trace_outline(xs, ys, comp)
        if walk is not None:
            out.extend(tile_polygon(RectilinearPolygon(walk)))
        else:
            out.extend(_slab_tiling(xs, ys, comp))
    return sorted(out)


def tile_region(rects: Iterable[Rect], region_test, b: Rect) -> list[Rect]:
    """Tile the part of b whose overlay cells satisfy region_test(cx2, cy2).

    The test receives doubled cell-centre coordinates.
    """
    rects = list(rects)
    xs = sorted({b.x1, b.x2} | {r.x1 for r in rects} | {r.x2 for r in rects})
    ys = sorted({b.y1, b.y2} | {r.y1 for r in rects} | {r.y2 for r in rects})
    cells = {
        (i, j)
        for i in range(len(xs) - 1)
        for j in range(len(ys) - 1)
        if region_test(xs[i] + xs[i + 1], ys[j] + ys[j + 1])
    }
    return tile_cells(xs, ys, cells)
