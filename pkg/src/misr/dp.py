"""The dynamic program over fake sets, and its single-level instantiation.

Entries are filled from smaller to larger region area. A non-basic entry
takes the best union of entries over valid decomposition pairs and triples
drawn from the family. Entries are keyed by the induced rectangle set, so
fake sets cutting out the same sub-instance share one table slot.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Iterator, Sequence

from .fakes import FakeSet, induced_indices, is_valid_fake_set, overlay, region_area, region_mask
from .geometry import Rect, interiors_overlap
from .instance import Instance
from .solvers import IndependentSet, OptCache, approx_divide

COORD_MODES = ("relevant", "input", "quantile")


class DPStateError(RuntimeError):
    def __init__(self, count: int, cap: int):
        super().__init__(f"family has more than {cap} states (stopped at {count})")
        self.count = count
        self.cap = cap


@dataclass(frozen=True)
class DPConfig:
    """What the dynamic program enumerates and how it recognizes basic sets.

    The family is every valid set of at most `enum_size` fake rects (capped
    by l_star) on the lattice picked by coord_mode, plus `seeds` of at most
    l_star rects. The empty set and the full box are always present.
    """

    l_star: int
    tau: int
    epsilon: float = 0.5
    coord_mode: str = "quantile"
    quantiles: int = 3  # interior lines per axis in quantile mode
    enum_size: int | None = None  # defaults to l_star
    seeds: tuple[FakeSet, ...] = ()
    basic_variant: str = "exact"  # or "approx"
    key_mode: str = "induced"  # or "region", which disables the collapse
    max_states: int = 20_000


@dataclass
class DPStats:
    states: int = 0
    basic: int = 0
    keys: int = 0
    candidate_checks: int = 0
    max_candidates: int = 0
    root_basic: bool = False
    table: dict = field(default_factory=dict, repr=False)  # key -> solution indices

    def to_row(self) -> dict:
        return {
            "states": self.states,
            "basic": self.basic,
            "keys": self.keys,
            "candidate_checks": self.candidate_checks,
            "max_candidates": self.max_candidates,
            "root_basic": int(self.root_basic),
        }


# -- basic sets ------------------------------------------------------------------------

def is_basic(inst: Instance, f: FakeSet, cfg: DPConfig, cache: OptCache | None = None) -> bool:
    idx = induced_indices(inst, f)
    if not idx:
        return True
    if cfg.basic_variant == "approx":
        return approx_divide([inst.rects[i] for i in idx]).value <= cfg.tau
    cache = cache or OptCache(inst.rects)
    return cache.value(idx) <= cfg.tau


def solve_basic(inst: Instance, f: FakeSet, cache: OptCache) -> IndependentSet:
    """Exact optimum of the sub-instance, which is in particular (1 - eps/2)-approximate."""
    return cache.solve(induced_indices(inst, f))


# -- family ----------------------------------------------------------------------------

def lattice(inst: Instance, coord_mode: str, quantiles: int = 3) -> tuple[list[int], list[int]]:
    b = inst.bbox
    axes = []
    for lo, hi, get in ((b.x1, b.x2, lambda r: (r.x1, r.x2)), (b.y1, b.y2, lambda r: (r.y1, r.y2))):
        coords = sorted({c for r in inst.rects for c in get(r)})
        if coord_mode == "relevant":
            pts = {c + d for c in coords for d in (-1, 0, 1)}
        elif coord_mode == "input":
            pts = set(coords)
        elif coord_mode == "quantile":
            k = len(coords)
            pts = {coords[(j * k) // (quantiles + 1)] for j in range(1, quantiles + 1)} if k else set()
        else:
            raise ValueError(f"unknown coord mode {coord_mode!r}")
        axes.append(sorted({lo, hi} | {p for p in pts if lo <= p <= hi}))
    return axes[0], axes[1]


def enumerate_family_section5(inst: Instance, l_star: int, coord_mode: str = "relevant", quantiles: int = 3) -> Iterator[FakeSet]:
    """Valid sets of at most l_star positive-area fake rects with corners on the lattice."""
    xs, ys = lattice(inst, coord_mode, quantiles)
    rects = [
        Rect(x1, y1, x2, y2, True)
        for x1, x2 in combinations(xs, 2)
        for y1, y2 in combinations(ys, 2)
    ]
    rects.sort()
    n = len(rects)

    def extend(chosen: list[int], start: int, size: int):
        if len(chosen) == size:
            yield FakeSet(tuple(rects[i] for i in chosen), inst.bbox)
            return
        for i in range(start, n):
            if not any(interiors_overlap(rects[i], rects[j]) for j in chosen):
                chosen.append(i)
                yield from extend(chosen, i + 1, size)
                chosen.pop()

    yield FakeSet.empty(inst.bbox)
    for size in range(1, l_star + 1):
        yield from extend([], 0, size)


def build_family(inst: Instance, cfg: DPConfig) -> list[FakeSet]:
    size = cfg.l_star if cfg.enum_size is None else min(cfg.enum_size, cfg.l_star)
    out: dict[tuple, FakeSet] = {}

    def add(f: FakeSet):
        if f.encoding() not in out:
            out[f.encoding()] = f
            if len(out) > cfg.max_states:
                raise DPStateError(len(out), cfg.max_states)

    add(FakeSet.empty(inst.bbox))
    add(FakeSet.full(inst.bbox))
    for f in enumerate_family_section5(inst, size, cfg.coord_mode, cfg.quantiles):
        add(f)
    for f in cfg.seeds:
        if len(f) <= cfg.l_star and is_valid_fake_set(f):
            add(FakeSet(f.rects, inst.bbox))
    return list(out.values())


# -- the table ---------------------------------------------------------------------------

def _best_union(cands: Sequence[tuple[int, int]]) -> tuple[int, tuple[int, ...]]:
    """Best single, pair or triple of pairwise disjoint candidates.

    cands holds (value, mask) sorted by value, largest first. Returns the
    total and the chosen positions.
    """
    c = len(cands)
    if not c:
        return 0, ()
    vals = [v for v, _ in cands]
    masks = [m for _, m in cands]
    disjoint = [0] * c
    for i in range(c):
        d = 0
        for j in range(i + 1, c):
            if not masks[i] & masks[j]:
                d |= 1 << j
        disjoint[i] = d
    best, pick = vals[0], (0,)
    for i in range(c):
        if 3 * vals[i] <= best:
            break
        d = disjoint[i]
        if not d:
            continue
        j = (d & -d).bit_length() - 1
        if vals[i] + vals[j] > best:
            best, pick = vals[i] + vals[j], (i, j)
        rest = d
        while rest:
            j = (rest & -rest).bit_length() - 1
            rest &= rest - 1
            if vals[i] + 2 * vals[j] <= best:
                break
            both = d & disjoint[j]
            if both:
                k = (both & -both).bit_length() - 1
                if vals[i] + vals[j] + vals[k] > best:
                    best, pick = vals[i] + vals[j] + vals[k], (i, j, k)
    return best, pick


def dp_solve(inst: Instance, cfg: DPConfig, cache: OptCache | None = None) -> tuple[IndependentSet, DPStats]:
    cache = cache or OptCache(inst.rects)
    stats = DPStats()
    root = FakeSet.empty(inst.bbox)
    if is_basic(inst, root, cfg, cache):
        stats.states = stats.basic = stats.keys = 1
        stats.root_basic = True
        sol = solve_basic(inst, root, cache)
        stats.table = {induced_indices(inst, root): sol.indices}
        return sol, stats

    family = build_family(inst, cfg)
    stats.states = len(family)
    xs, ys = overlay(family, inst.bbox)
    masks = [region_mask(f, xs, ys) for f in family]
    areas = [region_area(f) for f in family]
    order = sorted(range(len(family)), key=lambda k: (areas[k], family[k].encoding()))

    def key_of(k: int):
        if cfg.key_mode == "region":
            return family[k].encoding()
        return induced_indices(inst, family[k])

    keys = [key_of(k) for k in range(len(family))]
    table: dict = {}
    done: list[int] = []
    for k in order:
        f, m = family[k], masks[k]
        if is_basic(inst, f, cfg, cache):
            stats.basic += 1
            sol = solve_basic(inst, f, cache).indices
        else:
            by_mask: dict[int, tuple[int, int]] = {}
            for j in done:
                mj = masks[j]
                stats.candidate_checks += 1
                if mj & ~m or mj == m:
                    continue
                v = len(table[keys[j]])
                if v and (mj not in by_mask or by_mask[mj][0] < v):
                    by_mask[mj] = (v, j)
            cands = sorted(by_mask.items(), key=lambda it: (-it[1][0], it[1][1]))
            stats.max_candidates = max(stats.max_candidates, len(cands))
            _, pick = _best_union([(v, mj) for mj, (v, _) in cands])
            sol = tuple(sorted(i for p in pick for i in table[keys[cands[p][1][1]]]))
        old = table.get(keys[k])
        if old is None or len(sol) > len(old):
            table[keys[k]] = sol
        done.append(k)
    stats.keys = len(table)
    stats.table = table
    return IndependentSet(table[key_of(family.index(root))]), stats
