"""Exact and approximate maximum independent set solvers for rectangles."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import ceil, log2
from typing import Iterable, Sequence

from .geometry import Rect, interiors_overlap
from .instance import Instance, greedy_interval_mis, kernelize

DEFAULT_BUDGET = 10**7


class SolverBudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class IndependentSet:
    indices: tuple[int, ...]

    @property
    def value(self) -> int:
        return len(self.indices)

    def to_json(self) -> dict:
        return {"indices": list(self.indices)}


def is_independent(rects: Sequence[Rect], indices: Iterable[int]) -> bool:
    idx = list(indices)
    if len(set(idx)) != len(idx):
        return False
    return not any(
        interiors_overlap(rects[a], rects[b]) for k, a in enumerate(idx) for b in idx[k + 1 :]
    )


def _conflict_masks(rects: Sequence[Rect]) -> list[int]:
    n = len(rects)
    masks = [0] * n
    for i in range(n):
        for j in range(i + 1, n):
            if interiors_overlap(rects[i], rects[j]):
                masks[i] |= 1 << j
                masks[j] |= 1 << i
    return masks


class _Search:
    def __init__(self, masks: list[int], budget: int):
        self.masks = masks
        self.budget = budget
        self.nodes = 0

    def _tick(self):
        self.nodes += 1
        if self.nodes > self.budget:
            raise SolverBudgetExceeded(f"exact search exceeded {self.budget} nodes")

    def _bits(self, cand: int):
        while cand:
            low = cand & -cand
            yield low.bit_length() - 1
            cand ^= low

    def clique_cover_bound(self, cand: int) -> int:
        # greedy colouring of the conflict graph restricted to cand:
        # every colour class of conflicts holds at most one chosen vertex
        masks = self.masks
        bound = 0
        rest = cand
        while rest:
            bound += 1
            low = rest & -rest
            v = low.bit_length() - 1
            clique = low
            common = masks[v] & rest
            while common:
                lw = common & -common
                u = lw.bit_length() - 1
                clique |= lw
                common &= masks[u]
            rest &= ~clique
        return bound

    def best(self, cand: int, size: int, best: int) -> int:
        """Size of a maximum independent set inside cand plus size."""
        self._tick()
        if not cand:
            return max(best, size)
        if size + self.clique_cover_bound(cand) <= best:
            return best
        masks = self.masks
        v = max(self._bits(cand), key=lambda u: ((masks[u] & cand).bit_count(), -u))
        if not masks[v] & cand:
            # isolated vertex is always taken
            return self.best(cand & ~(1 << v), size + 1, best)
        best = self.best(cand & ~(1 << v) & ~masks[v], size + 1, best)
        return self.best(cand & ~(1 << v), size, best)

    def reaches(self, cand: int, need: int) -> bool:
        """True when cand holds an independent set of size need."""
        self._tick()
        if need <= 0:
            return True
        if cand.bit_count() < need or self.clique_cover_bound(cand) < need:
            return False
        masks = self.masks
        v = max(self._bits(cand), key=lambda u: ((masks[u] & cand).bit_count(), -u))
        if self.reaches(cand & ~(1 << v) & ~masks[v], need - 1):
            return True
        return self.reaches(cand & ~(1 << v), need)


def exact_mis(inst: Instance | Sequence[Rect], budget: int = DEFAULT_BUDGET) -> IndependentSet:
    """Maximum independent set, lexicographically smallest among the optima."""
    rects = inst.rects if isinstance(inst, Instance) else tuple(inst)
    n = len(rects)
    if n == 0:
        return IndependentSet(())
    masks = _conflict_masks(rects)
    search = _Search(masks, budget)
    full = (1 << n) - 1
    k = search.best(full, 0, 0)
    chosen, cand, need = [], full, k
    for i in range(n):
        if need == 0:
            break
        if not cand >> i & 1:
            continue
        # keep i if an optimum extension still exists
        if search.reaches(cand & ~(1 << i) & ~masks[i] & ~((1 << i) - 1), need - 1):
            chosen.append(i)
            cand &= ~(1 << i) & ~masks[i]
            need -= 1
        cand &= ~(1 << i)
    return IndependentSet(tuple(chosen))


def exact_value(rects: Sequence[Rect], budget: int = DEFAULT_BUDGET) -> int:
    if not rects:
        return 0
    return _Search(_conflict_masks(rects), budget).best((1 << len(rects)) - 1, 0, 0)


class OptCache:
    """Exact optima of index subsets of one rect list, memoized by subset."""

    def __init__(self, rects: Sequence[Rect], budget: int = DEFAULT_BUDGET):
        self.rects = tuple(rects)
        self.budget = budget
        self._values: dict[tuple, int] = {}
        self._sets: dict[tuple, IndependentSet] = {}

    def value(self, indices: Iterable[int]) -> int:
        key = tuple(sorted(indices))
        if key not in self._values:
            if key in self._sets:
                self._values[key] = self._sets[key].value
            else:
                self._values[key] = exact_value([self.rects[i] for i in key], self.budget)
        return self._values[key]

    def solve(self, indices: Iterable[int]) -> IndependentSet:
        """Optimum over the subset, reported in the full list's numbering."""
        key = tuple(sorted(indices))
        if key not in self._sets:
            sol = exact_mis([self.rects[i] for i in key], self.budget)
            self._sets[key] = IndependentSet(tuple(key[k] for k in sol.indices))
            self._values[key] = sol.value
        return self._sets[key]


def approx_factor(m: int) -> int:
    """Guarantee of approx_divide on m rectangles: value >= OPT / factor."""
    if m <= 1:
        return 1
    return ceil(log2(m)) + 1


def _divide(rects: Sequence[Rect], idx: list[int]) -> list[int]:
    if not idx:
        return []
    xs = sorted({c for i in idx for c in (rects[i].x1, rects[i].x2)})
    t = len(xs)
    if t <= 2:
        # every rect spans the same x-range, so one stab covers them all
        m = Fraction(xs[0] + xs[-1], 2)
    else:
        i = (t - 1) // 2
        m = Fraction(xs[i] + xs[i + 1], 2)
    stab = [i for i in idx if rects[i].x1 < m < rects[i].x2]
    left = [i for i in idx if rects[i].x2 <= m]
    right = [i for i in idx if rects[i].x1 >= m]
    # stabbed rects pairwise share x-range near m, so only y decides
    picked = greedy_interval_mis([(rects[i].y1, rects[i].y2) for i in stab])
    across = [stab[k] for k in picked]
    rest = _divide(rects, left) + _divide(rects, right)
    # either side may absorb compatible members of the other
    grown_rest = rest + [i for i in across if not any(interiors_overlap(rects[i], rects[j]) for j in rest)]
    grown_across = across + [j for j in rest if not any(interiors_overlap(rects[i], rects[j]) for i in across)]
    return max(grown_rest, grown_across, key=len)


def approx_divide(inst: Instance | Sequence[Rect]) -> IndependentSet:
    """Split at the median x-coordinate and recurse on both halves.

    Rects crossing the line form an interval problem solved exactly. The
    answer is the better of the crossing set and the halves, each padded
    with compatible rects from the other.
    """
    rects = inst.rects if isinstance(inst, Instance) else tuple(inst)
    return IndependentSet(tuple(sorted(_divide(rects, list(range(len(rects)))))))


def approx_wrapped(inst: Instance) -> IndependentSet:
    kernel, lift = kernelize(inst)
    sol = approx_divide(kernel)
    return IndependentSet(lift.lift(sol.indices))
