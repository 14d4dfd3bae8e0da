"""Fake rectangles, the sub-instances they cut out, and decomposition checks."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .geometry import Rect, interiors_overlap, intersects
from .instance import Instance, SolutionLift


@dataclass(frozen=True)
class FakeSet:
    rects: tuple[Rect, ...]
    bbox: Rect
    provenance: str | None = field(default=None, compare=False)

    def __post_init__(self):
        rs = tuple(sorted(r if r.closed else r.as_closed() for r in self.rects))
        object.__setattr__(self, "rects", rs)

    @classmethod
    def empty(cls, bbox: Rect, provenance=None) -> "FakeSet":
        return cls((), bbox, provenance)

    @classmethod
    def full(cls, bbox: Rect, provenance=None) -> "FakeSet":
        return cls((bbox.as_closed(),), bbox, provenance)

    def __len__(self):
        return len(self.rects)

    def encoding(self) -> tuple:
        return tuple(r.coords() for r in self.rects)

    def to_json(self) -> list:
        return [list(r.coords()) for r in self.rects]

    def covers(self, x2, y2) -> bool:
        """Doubled point (x2/2, y2/2) lies in some fake rect."""
        return any(2 * r.x1 <= x2 <= 2 * r.x2 and 2 * r.y1 <= y2 <= 2 * r.y2 for r in self.rects)


def fakeset_from_json(data: list, bbox: Rect) -> FakeSet:
    return FakeSet(tuple(Rect(*c, closed=True) for c in data), bbox)


def is_valid_fake_set(f: FakeSet) -> bool:
    b = f.bbox
    rs = f.rects
    if not all(b.contains(r) for r in rs):
        return False
    return not any(interiors_overlap(rs[i], rs[j]) for i in range(len(rs)) for j in range(i + 1, len(rs)))


def in_region(r: Rect, f: FakeSet) -> bool:
    """Open rect r lies inside S(f)."""
    return f.bbox.contains(r) and not any(intersects(r.as_open(), q) for q in f.rects)


def induced_indices(inst: Instance, f: FakeSet) -> tuple[int, ...]:
    return tuple(i for i, r in enumerate(inst.rects) if in_region(r, f))


def subinstance(inst: Instance, f: FakeSet) -> tuple[Instance, SolutionLift]:
    if not is_valid_fake_set(f):
        raise ValueError("invalid fake set")
    idx = induced_indices(inst, f)
    sub = Instance(tuple(inst.rects[i] for i in idx), inst.bbox)
    return sub, SolutionLift(tuple((i,) for i in idx))


# -- regions on the overlay grid ------------------------------------------------

def overlay(sets: Iterable[FakeSet], bbox: Rect) -> tuple[list, list]:
    xs, ys = {bbox.x1, bbox.x2}, {bbox.y1, bbox.y2}
    for f in sets:
        for r in f.rects:
            xs.update((r.x1, r.x2))
            ys.update((r.y1, r.y2))
    return sorted(xs), sorted(ys)


def region_mask(f: FakeSet, xs: Sequence, ys: Sequence) -> int:
    """Bit per overlay cell whose centre lies in S(f)."""
    mask, bit = 0, 0
    for i in range(len(xs) - 1):
        cx2 = xs[i] + xs[i + 1]
        for j in range(len(ys) - 1):
            cy2 = ys[j] + ys[j + 1]
            if not f.covers(cx2, cy2):
                mask |= 1 << bit
            bit += 1
    return mask


def region_area(f: FakeSet):
    xs, ys = overlay([f], f.bbox)
    area, bit = 0, 0
    mask = region_mask(f, xs, ys)
    for i in range(len(xs) - 1):
        for j in range(len(ys) - 1):
            if mask >> bit & 1:
                area += (xs[i + 1] - xs[i]) * (ys[j + 1] - ys[j])
            bit += 1
    return area


def _is_decomposition(f: FakeSet, parts: Sequence[FakeSet]) -> bool:
    xs, ys = overlay([f, *parts], f.bbox)
    parent = region_mask(f, xs, ys)
    masks = [region_mask(p, xs, ys) for p in parts]
    for m in masks:
        if m & ~parent or m == parent:
            return False
    for a in range(len(masks)):
        for b in range(a + 1, len(masks)):
            if masks[a] & masks[b]:
                return False
    return True


def is_decomposition_pair(f: FakeSet, f1: FakeSet, f2: FakeSet) -> bool:
    return _is_decomposition(f, (f1, f2))


def is_decomposition_triple(f: FakeSet, f1: FakeSet, f2: FakeSet, f3: FakeSet) -> bool:
    return _is_decomposition(f, (f1, f2, f3))
