"""Dual graphs of cell partitions, simple-cycle separators and balanced splits.

The dual has one vertex per cell plus an outer vertex standing for the
unbounded face. A cell touching several sides of the box has one parallel
edge to the outer vertex per side, so cycles of length two through the
outer vertex exist.

Which cells a cycle encloses is decided geometrically. The cycle is drawn
through cell centres and shared-segment midpoints; edges to the outer vertex
leave the box and the curve runs counter-clockwise around it. All points
are doubled so the crossing test stays in integers.
"""

from __future__ import annotations

from bisect import bisect_left
from collections import deque
from dataclasses import dataclass, field
from math import atan2, floor, sqrt
from typing import Iterator, Sequence

from .config import DEFAULT, Constants
from .fakes import FakeSet, in_region, induced_indices, is_decomposition_pair
from .geometry import Rect, tile_cells
from .grids import Grid
from .instance import Instance
from .partitions import CellPartition, build_grid_aligned_r_good, build_r_good_partition
from .solvers import IndependentSet, OptCache

SIDES = ("bottom", "right", "top", "left")


class SeparatorError(RuntimeError):
    pass


# -- dual graph -------------------------------------------------------------------

def _touched_sides(c: Rect, b: Rect) -> tuple[str, ...]:
    hit = (c.y1 == b.y1, c.x2 == b.x2, c.y2 == b.y2, c.x1 == b.x1)
    return tuple(s for s, h in zip(SIDES, hit) if h)


def _shared(a: Rect, c: Rect):
    """Doubled midpoint of the common boundary segment, or None."""
    if a.x2 == c.x1 or c.x2 == a.x1:
        x = a.x2 if a.x2 == c.x1 else a.x1
        lo, hi = max(a.y1, c.y1), min(a.y2, c.y2)
        if lo < hi:
            return (2 * x, lo + hi)
    if a.y2 == c.y1 or c.y2 == a.y1:
        y = a.y2 if a.y2 == c.y1 else a.y1
        lo, hi = max(a.x1, c.x1), min(a.x2, c.x2)
        if lo < hi:
            return (lo + hi, 2 * y)
    return None


@dataclass(frozen=True)
class WeightedPlanarGraph:
    cells: tuple[Rect, ...]
    weights: tuple[int, ...]  # one per cell, then the outer vertex
    nbrs: tuple[tuple[tuple[int, str | None], ...], ...]  # (vertex, side tag)
    mids: dict = field(repr=False, compare=False)  # (u, v) -> doubled midpoint
    s: int
    bbox: Rect

    @property
    def n(self) -> int:
        return len(self.cells) + 1

    @property
    def outer(self) -> int:
        return len(self.cells)

    @property
    def total_weight(self) -> int:
        return sum(self.weights)

    def length_bound(self) -> float:
        return 2 * sqrt(2 * (self.s // 2) * self.n)

    def rotation(self, v: int) -> tuple:
        """Neighbours of a cell vertex in counter-clockwise order."""
        cx, cy = _centre(self.cells[v])
        out = []
        for u, tag in self.nbrs[v]:
            px, py = self.mids[v, u] if tag is None else _port(self.cells[v], tag, self.bbox)[0]
            out.append((atan2(py - cy, px - cx), u, tag or ""))
        return tuple((u, tag or None) for _, u, tag in sorted(out))

    def weight_of(self, vs) -> int:
        return sum(self.weights[v] for v in vs)


def _centre(c: Rect) -> tuple[int, int]:
    return (c.x1 + c.x2, c.y1 + c.y2)


def _port(c: Rect, side: str, b: Rect):
    """Doubled points where an outer edge crosses the box and where it ends outside."""
    if side == "bottom":
        return (c.x1 + c.x2, 2 * b.y1), (c.x1 + c.x2, 2 * b.y1 - 1)
    if side == "top":
        return (c.x1 + c.x2, 2 * b.y2), (c.x1 + c.x2, 2 * b.y2 + 1)
    if side == "left":
        return (2 * b.x1, c.y1 + c.y2), (2 * b.x1 - 1, c.y1 + c.y2)
    return (2 * b.x2, c.y1 + c.y2), (2 * b.x2 + 1, c.y1 + c.y2)


def _face_size(cells: Sequence[Rect], b: Rect) -> int:
    count: dict = {}
    for c in cells:
        for p in c.corners():
            count[p] = count.get(p, 0) + 1
    best = 3
    for (x, y), k in count.items():
        on_box = x in (b.x1, b.x2) or y in (b.y1, b.y2)
        best = max(best, k + on_box)
    return best


def build_dual(p: CellPartition, weights: Sequence[int] | None = None) -> WeightedPlanarGraph:
    """Dual of the partition plus the outer vertex, with optional cell weights."""
    cells = p.cells
    k = len(cells)
    b = p.bbox
    adj: list[list] = [[] for _ in range(k + 1)]
    mids = {}
    for i in range(k):
        for j in range(i + 1, k):
            m = _shared(cells[i], cells[j])
            if m is not None:
                adj[i].append((j, None))
                adj[j].append((i, None))
                mids[i, j] = mids[j, i] = m
    for i, c in enumerate(cells):
        for side in _touched_sides(c, b):
            adj[i].append((k, side))
            adj[k].append((i, side))
    w = tuple(weights) if weights is not None else (0,) * k
    if len(w) == k:
        w = w + (0,)
    if len(w) != k + 1 or any(x < 0 for x in w):
        raise ValueError("need one non-negative weight per cell")
    return WeightedPlanarGraph(
        cells=tuple(cells),
        weights=w,
        nbrs=tuple(tuple(a) for a in adj),
        mids=mids,
        s=_face_size(cells, b),
        bbox=b,
    )


# -- cycles -----------------------------------------------------------------------

@dataclass(frozen=True)
class SeparatorCycle:
    vertices: tuple[int, ...]
    tags: tuple[str | None, ...]  # tag of the edge from vertices[i] to vertices[i+1]
    inside: frozenset[int]
    outside: frozenset[int]
    inside_weight: int
    outside_weight: int

    def __len__(self):
        return len(self.vertices)

    def to_json(self) -> dict:
        return {
            "vertices": list(self.vertices),
            "tags": list(self.tags),
            "inside": sorted(self.inside),
            "outside": sorted(self.outside),
            "weights": [self.inside_weight, self.outside_weight],
        }


def is_cycle(g: WeightedPlanarGraph, vertices: Sequence[int], tags: Sequence) -> bool:
    """A simple closed walk using existing, pairwise distinct edges."""
    m = len(vertices)
    if m < 2 or len(tags) != m or len(set(vertices)) != m:
        return False
    for i in range(m):
        u, v = vertices[i], vertices[(i + 1) % m]
        if (v, tags[i]) not in g.nbrs[u]:
            return False
    if m == 2:
        return tags[0] is not None and tags[0] != tags[1]
    return True


def _canonical(vertices, tags) -> tuple:
    m = len(vertices)
    best = None
    for seq, tg in ((list(vertices), list(tags)), (list(reversed(vertices)), _reverse_tags(tags))):
        k = seq.index(min(seq))
        key = (tuple(seq[k:] + seq[:k]), tuple(tg[k:] + tg[:k]))
        if best is None or _tag_key(key) < _tag_key(best):
            best = key
    return best


def _tag_key(key):
    return (key[0], tuple(t or "" for t in key[1]))


def _reverse_tags(tags):
    # edge i joins v_i to v_{i+1}; reversed, edge i joins w_i = v_{m-1-i} to v_{m-2-i}
    m = len(tags)
    return [tags[(m - 2 - i) % m] for i in range(m)]


def _curve(g: WeightedPlanarGraph, vertices, tags) -> list[tuple[int, int]]:
    """Closed polyline, in doubled coordinates, drawing the cycle."""
    b = g.bbox
    out_v = g.outer
    m = len(vertices)
    pts: list = []
    for i in range(m):
        u, v, tag = vertices[i], vertices[(i + 1) % m], tags[i]
        if u == out_v:
            continue
        pts.append(_centre(g.cells[u]))
        if v != out_v:
            pts.append(g.mids[u, v])
            continue
        # leave the box, walk around it, re-enter at the next cell
        cross, stub = _port(g.cells[u], tag, b)
        w, tag2 = vertices[(i + 2) % m], tags[(i + 1) % m]
        cross2, stub2 = _port(g.cells[w], tag2, b)
        pts += [cross, stub]
        pts += _around(stub, stub2, b)
        pts += [stub2, cross2]
    return pts


def _perimeter_pos(pt, box) -> tuple:
    (x, y), (x1, y1, x2, y2) = pt, box
    if y == y1 and x < x2:
        return (0, x)
    if x == x2 and y < y2:
        return (1, y)
    if y == y2 and x > x1:
        return (2, -x)
    return (3, -y)


def _around(a, c, b: Rect) -> list:
    """Corners of the box grown by a half unit met going CCW from a to c."""
    box = (2 * b.x1 - 1, 2 * b.y1 - 1, 2 * b.x2 + 1, 2 * b.y2 + 1)
    x1, y1, x2, y2 = box
    corners = [(x2, y1), (x2, y2), (x1, y2), (x1, y1)]  # ends of sides 0..3
    pa, pc = _perimeter_pos(a, box), _perimeter_pos(c, box)
    out = []
    side = pa[0]
    if pc[0] == side and pc > pa:
        return out
    for _ in range(4):
        out.append(corners[side])
        side = (side + 1) % 4
        if side == pc[0]:
            break
    return out


def _odd_crossings(poly, q) -> bool:
    """Point q strictly inside the closed polyline (even-odd rule, exact)."""
    qx, qy = q
    inside = False
    m = len(poly)
    for i in range(m):
        (ax, ay), (bx, by) = poly[i], poly[(i + 1) % m]
        if (ay > qy) == (by > qy):
            continue
        # crossing x = ax + (qy - ay)(bx - ax)/(by - ay); compare with qx
        num = ax * (by - ay) + (qy - ay) * (bx - ax)
        den = by - ay
        if (num > qx * den) if den > 0 else (num < qx * den):
            inside = not inside
    return inside


def cycle_sides(g: WeightedPlanarGraph, vertices, tags) -> tuple[frozenset, frozenset]:
    """Cells enclosed by the drawn cycle and cells outside it.

    The outer vertex, when not on the cycle, counts as outside.
    """
    poly = _curve(g, vertices, tags)
    on = set(vertices)
    inside, outside = set(), set()
    for i, c in enumerate(g.cells):
        if i in on:
            continue
        (inside if _odd_crossings(poly, _centre(c)) else outside).add(i)
    if g.outer not in on:
        outside.add(g.outer)
    return frozenset(inside), frozenset(outside)


def make_cycle(g: WeightedPlanarGraph, vertices, tags) -> SeparatorCycle:
    if not is_cycle(g, vertices, tags):
        raise SeparatorError(f"not a simple cycle: {list(vertices)}")
    inside, outside = cycle_sides(g, vertices, tags)
    return SeparatorCycle(
        tuple(vertices), tuple(tags), inside, outside, g.weight_of(inside), g.weight_of(outside)
    )


def is_balanced(g: WeightedPlanarGraph, c: SeparatorCycle) -> bool:
    w = g.total_weight
    return 3 * c.inside_weight <= 2 * w and 3 * c.outside_weight <= 2 * w


def separator_failures(g: WeightedPlanarGraph, c: SeparatorCycle) -> list[str]:
    bad = []
    if not is_cycle(g, c.vertices, c.tags):
        bad.append("not a simple cycle")
    if not is_balanced(g, c):
        bad.append("unbalanced")
    if len(c) > g.length_bound():
        bad.append(f"length {len(c)} above {g.length_bound():.2f}")
    return bad


# -- candidate cycles -----------------------------------------------------------------

def _line_cycles(g: WeightedPlanarGraph) -> Iterator[tuple]:
    """A column (or row) of cells crossed by one line, closed through the outer vertex."""
    cells, out_v = g.cells, g.outer
    for axis in (0, 1):
        coords = sorted({c.x1 for c in cells} | {c.x2 for c in cells}) if axis == 0 else sorted(
            {c.y1 for c in cells} | {c.y2 for c in cells}
        )
        for a, c in zip(coords, coords[1:]):
            m2 = a + c  # doubled line position
            if axis == 0:
                col = sorted((i for i, q in enumerate(cells) if 2 * q.x1 < m2 < 2 * q.x2), key=lambda i: cells[i].y1)
                first, last = "bottom", "top"
            else:
                col = sorted((i for i, q in enumerate(cells) if 2 * q.y1 < m2 < 2 * q.y2), key=lambda i: cells[i].x1)
                first, last = "left", "right"
            verts = [out_v] + col
            tags = [first] + [None] * (len(col) - 1) + [last]
            yield verts, tags


def _face_cycles(g: WeightedPlanarGraph) -> Iterator[tuple]:
    """Cells (and possibly the outer vertex) around each corner point."""
    cells, b, out_v = g.cells, g.bbox, g.outer
    points = sorted({p for c in cells for p in c.corners()})
    for x, y in points:
        around = [i for i, c in enumerate(cells) if c.x1 <= x <= c.x2 and c.y1 <= y <= c.y2]
        box_sides = [s for s, on in zip(SIDES, (y == b.y1, x == b.x2, y == b.y2, x == b.x1)) if on]
        if len(box_sides) == 2:
            (i,) = around
            yield [i, out_v], box_sides
            continue
        items = []
        for i in around:
            cx, cy = _centre(cells[i])
            items.append((atan2(cy - 2 * y, cx - 2 * x), i))
        if box_sides:
            normal = {"bottom": (0, -1), "right": (1, 0), "top": (0, 1), "left": (-1, 0)}[box_sides[0]]
            items.append((atan2(normal[1], normal[0]), out_v))
        items.sort()
        verts = [i for _, i in items]
        if len(verts) < 3:
            continue
        tags = []
        for k in range(len(verts)):
            u, v = verts[k], verts[(k + 1) % len(verts)]
            tags.append(box_sides[0] if out_v in (u, v) else None)
        yield verts, tags


def _fundamental_cycles(g: WeightedPlanarGraph, root: int) -> Iterator[tuple]:
    parent: dict = {root: (None, None)}
    depth = {root: 0}
    order = deque([root])
    tree = set()
    while order:
        u = order.popleft()
        for v, tag in g.nbrs[u]:
            if v not in parent:
                parent[v] = (u, tag)
                depth[v] = depth[u] + 1
                tree.add((min(u, v), max(u, v), tag))
                order.append(v)
    seen = set()
    for u in range(g.n):
        for v, tag in g.nbrs[u]:
            e = (min(u, v), max(u, v), tag)
            if e in tree or e in seen or u not in parent or v not in parent:
                continue
            seen.add(e)
            # climb both ends to their lowest common ancestor
            pu, tu, pv, tv = [u], [], [v], []
            a, c = u, v
            while depth[a] > depth[c]:
                tu.append(parent[a][1])
                a = parent[a][0]
                pu.append(a)
            while depth[c] > depth[a]:
                tv.append(parent[c][1])
                c = parent[c][0]
                pv.append(c)
            while a != c:
                tu.append(parent[a][1])
                a = parent[a][0]
                pu.append(a)
                tv.append(parent[c][1])
                c = parent[c][0]
                pv.append(c)
            # u -> ... -> lca -> ... -> v -> u
            verts = pu + list(reversed(pv[:-1]))
            tags = tu + list(reversed(tv)) + [tag]
            yield verts, tags


def _all_cycles(g: WeightedPlanarGraph, max_len: int, budget: int) -> Iterator[tuple]:
    """Every simple cycle up to max_len vertices, each reported once per direction."""
    steps = 0
    for s in range(g.n):
        path, tags = [s], []
        on = {s}
        stack = [iter(g.nbrs[s])]
        while stack:
            steps += 1
            if steps > budget:
                return
            nxt = next(stack[-1], None)
            if nxt is None:
                stack.pop()
                on.discard(path.pop())
                if tags:
                    tags.pop()
                continue
            v, tag = nxt
            if v == s:
                if len(path) >= 3 or (len(path) == 2 and tag is not None and tag != tags[0]):
                    yield list(path), tags + [tag]
                continue
            if v < s or v in on or len(path) >= max_len:
                continue
            path.append(v)
            tags.append(tag)
            on.add(v)
            stack.append(iter(g.nbrs[v]))


def candidate_cycles(g: WeightedPlanarGraph, cfg: Constants = DEFAULT, exhaustive: bool | None = None):
    """Distinct simple cycles within the length bound, cheapest sources first."""
    bound = floor(g.length_bound())
    seen = set()

    def emit(source):
        for verts, tags in source:
            if len(verts) > bound or not is_cycle(g, verts, tags):
                continue
            key = _canonical(verts, tags)
            if key in seen:
                continue
            seen.add(key)
            yield key

    yield from emit(_line_cycles(g))
    yield from emit(_face_cycles(g))
    heavy = max(range(g.n), key=lambda v: (g.weights[v], -v))
    for root in dict.fromkeys((g.outer, heavy, 0, (g.n - 1) // 2)):
        yield from emit(_fundamental_cycles(g, root))
    if exhaustive is None:
        exhaustive = g.n <= cfg.exhaustive_cycles
    if exhaustive:
        yield from emit(_all_cycles(g, bound, 10**7))


def cycle_separator(g: WeightedPlanarGraph, cfg: Constants = DEFAULT, pool: int = 1) -> list[SeparatorCycle]:
    """Balanced simple cycles within the length bound, best balance first.

    Returns up to pool cycles. Small duals are searched exhaustively when
    the heuristic sources find nothing; larger ones fall back to a bounded
    search.
    """
    if g.total_weight <= 0:
        raise SeparatorError("total weight must be positive")
    found = []
    for verts, tags in candidate_cycles(g, cfg, exhaustive=False):
        c = make_cycle(g, verts, tags)
        if is_balanced(g, c):
            found.append(c)
    bound = floor(g.length_bound())
    have = {_canonical(c.vertices, c.tags) for c in found}
    # top up with a bounded search; small duals may search to exhaustion
    # but stop at the first success once nothing else was found
    rounds = [20_000] if len(found) < pool else []
    if g.n <= cfg.exhaustive_cycles:
        rounds.append(None)
    for budget in rounds:
        if budget is None and found:
            break
        for verts, tags in _all_cycles(g, bound, budget or 10**15):
            key = _canonical(verts, tags)
            if key in have:
                continue
            have.add(key)
            c = make_cycle(g, *key)
            if is_balanced(g, c):
                found.append(c)
                if len(found) >= pool or budget is None:
                    break
    if not found:
        raise SeparatorError("no balanced cycle within the length bound")
    found.sort(key=lambda c: (max(c.inside_weight, c.outside_weight), len(c), _tag_key((c.vertices, c.tags))))
    return found[:pool] if pool else found


# -- splits ----------------------------------------------------------------------------

@dataclass(frozen=True)
class Split:
    """Fake sets produced by a decomposition, plus what the search measured."""

    parts: tuple[FakeSet, ...]
    lost: tuple[int, ...] = ()  # OPT' indices kept by no part
    separator_cells: tuple[int, ...] = ()  # OPT' indices meeting a cycle cell
    cycles: tuple[SeparatorCycle, ...] = ()
    r: int = 0

    def __iter__(self):
        return iter(self.parts)

    def __len__(self):
        return len(self.parts)

    def __getitem__(self, k):
        return self.parts[k]


class _Overlay:
    def __init__(self, p: CellPartition):
        self.xs = sorted({c.x1 for c in p.cells} | {c.x2 for c in p.cells})
        self.ys = sorted({c.y1 for c in p.cells} | {c.y2 for c in p.cells})
        self.blocks = []
        for c in p.cells:
            i1, i2 = bisect_left(self.xs, c.x1), bisect_left(self.xs, c.x2)
            j1, j2 = bisect_left(self.ys, c.y1), bisect_left(self.ys, c.y2)
            self.blocks.append({(i, j) for i in range(i1, i2) for j in range(j1, j2)})

    def tile(self, cell_ids) -> list[Rect]:
        cells = set()
        for k in cell_ids:
            cells |= self.blocks[k]
        return tile_cells(self.xs, self.ys, cells)


def _sides_for(g: WeightedPlanarGraph, c: SeparatorCycle) -> list[frozenset]:
    """Cell sets I (cycle cells plus one side) the split may use."""
    ring = frozenset(v for v in c.vertices if v != g.outer)
    if g.outer not in c.vertices:
        return [ring | c.inside]
    return [ring | c.inside, ring | (c.outside - {g.outer})]


def _evaluate(inst, f, opt_idx, p, g, c, overlay, fake_ids):
    out = []
    k = len(p.cells)
    ring = [v for v in c.vertices if v != g.outer]
    for inner in _sides_for(g, c):
        rest = frozenset(range(k)) - inner
        if not (inner - fake_ids) or not (rest - fake_ids):
            continue  # one side would keep the whole region
        f1 = FakeSet(tuple(overlay.tile(inner | fake_ids)), f.bbox, "outside")
        f2 = FakeSet(tuple(overlay.tile(rest | fake_ids)), f.bbox, "inside")
        kept1 = [i for i in opt_idx if in_region(inst.rects[i], f1)]
        kept2 = [i for i in opt_idx if in_region(inst.rects[i], f2)]
        lost = tuple(sorted(set(opt_idx) - set(kept1) - set(kept2)))
        touching = tuple(
            i for i in opt_idx if any(p.cells[v].x1 < inst.rects[i].x2 and inst.rects[i].x1 < p.cells[v].x2
                                      and p.cells[v].y1 < inst.rects[i].y2 and inst.rects[i].y1 < p.cells[v].y2
                                      for v in ring)
        )
        out.append((f1, f2, len(kept1), len(kept2), lost, touching))
    return out


def _split(inst, f, opt_prime, p, weights, key, cfg, pool):
    g = build_dual(p, weights)
    fake_ids = frozenset(i for i, fk in enumerate(p.fake) if fk)
    overlay = _Overlay(p)
    opt_idx = list(opt_prime.indices)
    best = None
    for c in cycle_separator(g, cfg, pool=pool):
        for f1, f2, k1, k2, lost, touching in _evaluate(inst, f, opt_idx, p, g, c, overlay, fake_ids):
            if not is_decomposition_pair(f, f1, f2):
                continue
            score = key(f1, f2, k1, k2, lost, c)
            if best is None or score < best[0]:
                best = (score, Split((f1, f2), lost, touching, (c,), p.r))
    if best is None:
        raise SeparatorError("no balanced cycle yields a valid decomposition pair")
    return best[1]


def _check_split_pre(f: FakeSet, opt_prime: IndependentSet, p: CellPartition, cfg: Constants, need_l: bool):
    l = len(f)
    if need_l and l <= 3:
        raise SeparatorError("the boundary-reducing split needs more than three fake rects")
    if p.r < max(l, 3):
        raise SeparatorError(f"partition parameter r={p.r} below max(|F|, 3)")
    if cfg.strict and 2 * p.r > opt_prime.value:
        raise SeparatorError("r above |OPT'|/2")
    cellset = set(p.cells)
    if any(q not in cellset for q in f.rects):
        raise SeparatorError("fake rects must be cells of the partition")


def reduce_limit(l: int, r: int, cfg: Constants = DEFAULT) -> float:
    return 2 * l / 3 + cfg.c1 * sqrt(r)


def balanced_limit(l: int, r: int, cfg: Constants = DEFAULT) -> float:
    return l + cfg.c2 * sqrt(r)


def split_reduce_boundary(
    inst: Instance,
    f: FakeSet,
    opt_prime: IndependentSet,
    p: CellPartition,
    cfg: Constants = DEFAULT,
    pool: int = 48,
    limit: float | None = None,
) -> Split:
    """Cut along a cycle balancing the fake cells.

    Among balanced cycles, prefers outputs within the boundary limit, then
    fewer lost OPT' rects, then fewer output rects.
    """
    _check_split_pre(f, opt_prime, p, cfg, need_l=True)
    weights = [1 if fk else 0 for fk in p.fake]
    l = len(f)
    limit = reduce_limit(l, p.r, cfg) if limit is None else limit

    def key(f1, f2, k1, k2, lost, c):
        big = max(len(f1), len(f2))
        return (big > limit, big >= l, len(lost), big, len(f1) + len(f2), len(c))

    return _split(inst, f, opt_prime, p, weights, key, cfg, pool)


def corner_weights(inst: Instance, opt_prime: IndependentSet, p: CellPartition) -> list[int]:
    """Each OPT' rect counts once, at the cell just inside its upper-left corner."""
    w = [0] * len(p.cells)
    for i in opt_prime.indices:
        r = inst.rects[i]
        # the point (x1 + e, y2 - e) for a tiny e
        for k, c in enumerate(p.cells):
            if c.x1 <= r.x1 < c.x2 and c.y1 < r.y2 <= c.y2:
                if not p.fake[k]:
                    w[k] += 1
                break
    return w


def split_balanced(
    inst: Instance,
    f: FakeSet,
    opt_prime: IndependentSet,
    p: CellPartition,
    cfg: Constants = DEFAULT,
    pool: int = 48,
    limit: float | None = None,
) -> Split:
    """Cut along a cycle balancing OPT' by upper-left corners.

    Among balanced cycles, prefers sides holding at most 3/4 of OPT', then
    outputs within the boundary limit, then fewer lost rects.
    """
    _check_split_pre(f, opt_prime, p, cfg, need_l=False)
    weights = corner_weights(inst, opt_prime, p)
    total = opt_prime.value
    limit = balanced_limit(len(f), p.r, cfg) if limit is None else limit

    def key(f1, f2, k1, k2, lost, c):
        big = max(len(f1), len(f2))
        return (4 * max(k1, k2) > 3 * total, big > limit, len(lost), max(k1, k2), big, len(c))

    return _split(inst, f, opt_prime, p, weights, key, cfg, pool)


# -- corollary-level decompositions --------------------------------------------------------

def triple_r(l_star: int, f: FakeSet, cfg: Constants = DEFAULT) -> int:
    base = (l_star * l_star) // (9 * (cfg.c1 + cfg.c2) ** 2)
    return max(base, len(f), 3)


def _partition(inst, f, opt, r, seed, cfg, grid):
    if grid is None:
        return build_r_good_partition(inst, f, opt, r, seed, cfg)
    return build_grid_aligned_r_good(inst, f, opt, r, grid, seed, cfg)


ATTEMPTS = 8  # fresh partitions tried before settling for the best split seen


def _attempts(build, good, seed):
    """Run build(seed') for successive seeds until good(result) holds."""
    best = None
    for k in range(ATTEMPTS):
        try:
            s = build(seed + 1000 * k)
        except SeparatorError:
            continue
        if good(s):
            return s
        best = best or s
    if best is None:
        raise SeparatorError("no attempt produced a valid split")
    return best


def _first_stage(inst, f, r, seed, cfg, cache, grid, limit):
    opt = cache.solve(induced_indices(inst, f))

    def build(sd):
        p = _partition(inst, f, opt, r, sd, cfg, grid)
        return split_reduce_boundary(inst, f, opt, p, cfg, limit=limit)

    s = _attempts(build, lambda s: max(map(len, s.parts)) <= limit, seed)
    a, c = s.parts
    if cache.value(induced_indices(inst, c)) > cache.value(induced_indices(inst, a)):
        a, c = c, a
    return Split((a, c), s.lost, s.separator_cells, s.cycles, r)


def _decompose_triple(inst, f, l_star, seed, cfg, cache, grid) -> Split:
    cache = cache or OptCache(inst.rects)
    if cfg.strict and cache.value(induced_indices(inst, f)) < 64 * l_star * l_star:
        raise SeparatorError("OPT_F below 64 L*^2")
    if len(f) > l_star:
        raise SeparatorError("|F| above L*")
    r = triple_r(l_star, f, cfg)
    # the grid variant promises 3L*/4; the plain one L*
    limit = 3 * l_star / 4 if grid is not None else l_star
    if len(f) > 3:
        first = _first_stage(inst, f, r, seed, cfg, cache, grid, limit)
        f1p, f2p = first.parts
        lost, cycles = first.lost, first.cycles
    else:
        f1p, f2p = f, FakeSet.full(f.bbox, "empty")
        lost, cycles = (), ()
    opt2 = cache.solve(induced_indices(inst, f1p))
    r2 = max(r, len(f1p), 3)

    def build(sd):
        p2 = _partition(inst, f1p, opt2, r2, sd, cfg, grid)
        return split_balanced(inst, f1p, opt2, p2, cfg, limit=limit)

    def good(s):
        sides = [cache.value(induced_indices(inst, q)) for q in s.parts]
        return max(map(len, s.parts)) <= limit and 4 * max(sides) <= 3 * opt2.value

    second = _attempts(build, good, seed + 1)
    a, c = second.parts
    return Split((a, c, f2p), lost + second.lost, second.separator_cells, cycles + second.cycles, r)


def decompose_triple(
    inst: Instance, f: FakeSet, l_star: int, seed: int = 0, cfg: Constants = DEFAULT, cache: OptCache | None = None
) -> Split:
    """Three sub-instances: a boundary-reducing cut, then a balancing cut of the larger side."""
    return _decompose_triple(inst, f, l_star, seed, cfg, cache, None)


def decompose_triple_grid(
    inst: Instance,
    f: FakeSet,
    l_star: int,
    g: Grid,
    seed: int = 0,
    cfg: Constants = DEFAULT,
    cache: OptCache | None = None,
) -> Split:
    """decompose_triple on grid-aligned partitions, so every output rect lies on g."""
    if cfg.strict and g.rho < 32 * l_star * l_star:
        raise SeparatorError("grid accuracy below 32 L*^2")
    return _decompose_triple(inst, f, l_star, seed, cfg, cache, g)


def decompose_pair_grid(
    inst: Instance, f: FakeSet, g: Grid, seed: int = 0, cfg: Constants = DEFAULT, cache: OptCache | None = None
) -> Split:
    """One grid-aligned boundary-reducing cut of f."""
    cache = cache or OptCache(inst.rects)
    l = len(f)
    if cfg.strict and (g.rho < 32 * l * l or cache.value(induced_indices(inst, f)) < 512 * l * l):
        raise SeparatorError("grid accuracy or OPT_F too small for the pair cut")
    r = triple_r(l, f, cfg)
    return _first_stage(inst, f, r, seed, cfg, cache, g, limit=-(-3 * l // 4))

