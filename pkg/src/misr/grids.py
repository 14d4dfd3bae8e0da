"""Discretizing grids whose strips each hold a bounded share of the optimum."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import ceil
from typing import Callable, Sequence

from .config import DEFAULT, Constants
from .fakes import FakeSet, induced_indices
from .geometry import Rect
from .instance import Instance
from .solvers import OptCache, approx_divide, approx_factor


@dataclass(frozen=True)
class Grid:
    vlines: tuple[int, ...]
    hlines: tuple[int, ...]
    rho: Fraction = Fraction(1)

    def __post_init__(self):
        object.__setattr__(self, "vlines", tuple(sorted(set(self.vlines))))
        object.__setattr__(self, "hlines", tuple(sorted(set(self.hlines))))
        object.__setattr__(self, "rho", Fraction(self.rho))

    @property
    def size(self) -> int:
        return len(self.vlines) + len(self.hlines)

    def aligned(self, r: Rect) -> bool:
        v, h = set(self.vlines), set(self.hlines)
        return r.x1 in v and r.x2 in v and r.y1 in h and r.y2 in h

    def strips(self, bbox: Rect):
        """Closed vertical strips then closed horizontal strips."""
        vs = [Rect(a, bbox.y1, b, bbox.y2, True) for a, b in zip(self.vlines, self.vlines[1:])]
        hs = [Rect(bbox.x1, a, bbox.x2, b, True) for a, b in zip(self.hlines, self.hlines[1:])]
        return vs, hs

    def to_json(self) -> dict:
        return {"vlines": list(self.vlines), "hlines": list(self.hlines), "rho": str(self.rho)}


def strip_cap(opt: int, rho) -> int:
    return ceil(Fraction(opt) / Fraction(rho))


def in_strip(r: Rect, strip: Rect) -> bool:
    """Open rect inside a closed strip."""
    return strip.contains(r)


def is_rho_accurate(g: Grid, inst: Instance, f: FakeSet, rho, cache: OptCache | None = None) -> bool:
    return not accuracy_failures(g, inst, f, rho, cache)


def accuracy_failures(g: Grid, inst: Instance, f: FakeSet, rho, cache: OptCache | None = None) -> list[str]:
    cache = cache or OptCache(inst.rects)
    b = inst.bbox
    bad = []
    if g.vlines[0] != b.x1 or g.vlines[-1] != b.x2 or g.hlines[0] != b.y1 or g.hlines[-1] != b.y2:
        bad.append("outer lines differ from the box")
    if not all(g.aligned(q) for q in f.rects):
        bad.append("fake rect not aligned")
    idx = induced_indices(inst, f)
    cap = strip_cap(cache.value(idx), rho)
    vs, hs = g.strips(b)
    for s in vs + hs:
        inside = [i for i in idx if in_strip(inst.rects[i], s)]
        if cache.value(inside) > cap:
            bad.append(f"strip {s.coords()} holds more than {cap}")
    return bad


def _lo(r: Rect, axis: int):
    return r.x1 if axis == 0 else r.y1


def _hi(r: Rect, axis: int):
    return r.x2 if axis == 0 else r.y2


def _sweep(
    idx: Sequence[int],
    rects: Sequence[Rect],
    lo: int,
    hi: int,
    axis: int,
    small_enough: Callable[[list[int]], bool],
) -> list[int]:
    """Greedy sweep: extend each strip to the last candidate keeping it small.

    Candidates are the far boundaries of the rects; axis 0 sweeps x.
    """
    ends = sorted({_hi(rects[i], axis) for i in idx})
    lines = [lo]
    cur = lo
    while True:
        inside_of = lambda x: [i for i in idx if cur <= _lo(rects[i], axis) and _hi(rects[i], axis) <= x]
        if small_enough(inside_of(hi)):
            break
        nxt = None
        for x in ends:
            if x <= cur:
                continue
            if small_enough(inside_of(x)):
                nxt = x
            else:
                break
        if nxt is None:
            # a single rect already breaks the budget; it gets its own strip
            nxt = min(x for x in ends if x > cur)
        lines.append(nxt)
        cur = nxt
    lines.append(hi)
    return lines


def _threshold_sweep(idx, rects, lo, hi, axis, value, tau) -> list[int]:
    """First candidate where the approximate strip value reaches tau/2."""
    ends = sorted({_hi(rects[i], axis) for i in idx})
    lines, cur = [lo], lo
    for x in ends:
        if x <= cur:
            continue
        inside = [i for i in idx if cur <= _lo(rects[i], axis) and _hi(rects[i], axis) <= x]
        if 2 * value(inside) >= tau:
            lines.append(x)
            cur = x
    lines.append(hi)
    return sorted(set(lines))


def build_rho_accurate_grid(
    inst: Instance,
    f: FakeSet,
    rho,
    cfg: Constants = DEFAULT,
    cache: OptCache | None = None,
) -> Grid:
    """Sweep lines left to right (and bottom to top) bounding each strip's optimum.

    Small optima (below cfg.w) use exact strip values. Larger ones follow
    the guess-and-sweep scheme driven by approx_divide, then any strip the
    exact check still rejects is swept again exactly.
    """
    rho = Fraction(rho)
    if rho < 1:
        raise ValueError("rho must be at least 1")
    cache = cache or OptCache(inst.rects)
    b = inst.bbox
    rects = inst.rects
    idx = list(induced_indices(inst, f))

    def exact_small(cap):
        return lambda sub: cache.value(sub) <= cap

    corner_x = {c for q in f.rects for c in (q.x1, q.x2)}
    corner_y = {c for q in f.rects for c in (q.y1, q.y2)}
    approx_value = lambda sub: approx_divide([rects[i] for i in sub]).value
    alpha = approx_factor(len(idx))
    w_prime = approx_value(idx)
    if w_prime < cfg.w:
        cap = strip_cap(cache.value(idx), rho)
        vl = _sweep(idx, rects, b.x1, b.x2, 0, exact_small(cap))
        hl = _sweep(idx, rects, b.y1, b.y2, 1, exact_small(cap))
    else:
        limit = 2 * rho * alpha + 1
        vl = hl = None
        for w in range(w_prime, alpha * w_prime + 1):
            tau = Fraction(w) / (rho * alpha)
            vl = _threshold_sweep(idx, rects, b.x1, b.x2, 0, approx_value, tau)
            hl = _threshold_sweep(idx, rects, b.y1, b.y2, 1, approx_value, tau)
            if len(vl) <= limit and len(hl) <= limit:
                break
    g = Grid(tuple(set(vl) | corner_x), tuple(set(hl) | corner_y), rho)
    return _repair(g, inst, f, idx, cache)


def _repair(g: Grid, inst: Instance, f: FakeSet, idx, cache: OptCache) -> Grid:
    """Split any strip whose exact optimum is above the cap."""
    cap = strip_cap(cache.value(idx), g.rho)
    rects = inst.rects
    small = lambda sub: cache.value(sub) <= cap
    out = []
    for axis, lines in ((0, g.vlines), (1, g.hlines)):
        new = set(lines)
        for a, c in zip(lines, lines[1:]):
            inside = [i for i in idx if a <= _lo(rects[i], axis) and _hi(rects[i], axis) <= c]
            if not small(inside):
                new.update(_sweep(inside, rects, a, c, axis, small))
        out.append(tuple(new))
    return Grid(out[0], out[1], g.rho)


def refine_aligned_grid(
    g: Grid,
    inst: Instance,
    f: FakeSet,
    rho_prime,
    cfg: Constants = DEFAULT,
    cache: OptCache | None = None,
) -> Grid:
    """A rho'-accurate grid using only lines of g.

    Fresh lines already in g are kept; any other fresh line is replaced by
    the two g lines around it.
    """
    rho_prime = Fraction(rho_prime)
    if rho_prime > g.rho:
        raise ValueError("rho' may not exceed the accuracy of g")
    fresh = build_rho_accurate_grid(inst, f, rho_prime, cfg, cache)

    def pick(fresh_lines, old):
        keep = set()
        for v in fresh_lines:
            if v in old:
                keep.add(v)
            else:
                keep.add(max(u for u in old if u < v))
                keep.add(min(u for u in old if u > v))
        return tuple(keep)

    return Grid(pick(fresh.vlines, g.vlines), pick(fresh.hlines, g.hlines), rho_prime)
