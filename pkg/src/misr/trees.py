"""Partitioning trees: loss accounting, verification and the tree builders.

A tree never needs to be efficient to build; it certifies that the dynamic
program has a good answer. Builders therefore use exact optima throughout.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from math import ceil, floor, log, log2, sqrt
from typing import Callable, Iterable, Sequence

from .config import DEFAULT, Constants
from .fakes import FakeSet, induced_indices, is_decomposition_pair, is_decomposition_triple, overlay, region_mask
from .grids import Grid
from .instance import Instance
from .separators import decompose_pair_grid, decompose_triple, decompose_triple_grid
from .solvers import OptCache


class TreeError(RuntimeError):
    pass


@dataclass
class Node:
    fake: FakeSet
    opt: int
    parent: int | None = None
    children: list[int] = field(default_factory=list)
    mu: int | None = None
    tag: str = ""  # how the node arose: "split", "discard", "cleanup", ...


class PartitionTree:
    """Rooted tree of fake sets; node 0 is the root."""

    def __init__(self, inst: Instance, root: FakeSet, cache: OptCache | None = None):
        self.inst = inst
        self.cache = cache or OptCache(inst.rects)
        self.nodes: list[Node] = [Node(root, self.opt_of(root), tag="root")]

    def opt_of(self, f: FakeSet) -> int:
        return self.cache.value(induced_indices(self.inst, f))

    def add_children(self, v: int, sets: Sequence[FakeSet], tags: Sequence[str] | None = None) -> list[int]:
        if self.nodes[v].children:
            raise TreeError(f"node {v} already has children")
        tags = tags or ["split"] * len(sets)
        ids = []
        for f, t in zip(sets, tags):
            self.nodes.append(Node(f, self.opt_of(f), v, tag=t))
            ids.append(len(self.nodes) - 1)
        self.nodes[v].children = ids
        return ids

    def graft(self, v: int, sub: "PartitionTree") -> None:
        """Identify sub's root with leaf v."""
        if self.nodes[v].children or sub.nodes[0].fake != self.nodes[v].fake:
            raise TreeError("graft target must be a leaf with the same label")
        base = len(self.nodes) - 1
        remap = {0: v}
        for k in range(1, len(sub.nodes)):
            remap[k] = base + k
        for k, node in enumerate(sub.nodes):
            kids = [remap[c] for c in node.children]
            if k == 0:
                self.nodes[v].children = kids
                continue
            self.nodes.append(Node(node.fake, node.opt, remap[node.parent], kids, node.mu, node.tag))

    # -- structure ---------------------------------------------------------------

    def __len__(self):
        return len(self.nodes)

    @property
    def root(self) -> Node:
        return self.nodes[0]

    def leaves(self) -> list[int]:
        return [k for k, n in enumerate(self.nodes) if not n.children]

    def inner(self) -> list[int]:
        return [k for k, n in enumerate(self.nodes) if n.children]

    def depth(self, v: int) -> int:
        """Number of vertices on the path from v to the root, v included."""
        d = 1
        while self.nodes[v].parent is not None:
            v = self.nodes[v].parent
            d += 1
        return d

    def levels(self) -> dict[int, list[int]]:
        """Inner vertices grouped by depth."""
        out: dict[int, list[int]] = {}
        for v in self.inner():
            out.setdefault(self.depth(v), []).append(v)
        return out

    def height(self) -> int:
        return max(self.depth(v) for v in range(len(self.nodes)))

    # -- values -----------------------------------------------------------------

    def loss_at(self, v: int) -> int:
        n = self.nodes[v]
        return n.opt - sum(self.nodes[c].opt for c in n.children)

    def loss_by_leaves(self) -> int:
        return self.root.opt - sum(self.nodes[v].opt for v in self.leaves())

    def loss_by_sum(self) -> int:
        return sum(self.loss_at(v) for v in self.inner())

    def assign_mu(self, leaf_value: Callable[[FakeSet], int] | None = None) -> int:
        """Leaf values from leaf_value (exact optimum by default), summed upward."""
        leaf_value = leaf_value or self.opt_of
        for v in reversed(range(len(self.nodes))):
            n = self.nodes[v]
            n.mu = sum(self.nodes[c].mu for c in n.children) if n.children else leaf_value(n.fake)
        return self.root.mu

    def is_empty_region(self, v: int) -> bool:
        f = self.nodes[v].fake
        xs, ys = overlay([f], f.bbox)
        return region_mask(f, xs, ys) == 0

    def to_json(self) -> dict:
        return {
            "nodes": [
                {
                    "id": k,
                    "fakes": n.fake.to_json(),
                    "opt": n.opt,
                    "children": n.children,
                    "mu": n.mu,
                    "loss": self.loss_at(k) if n.children else 0,
                    "tag": n.tag,
                }
                for k, n in enumerate(self.nodes)
            ],
            "loss": tree_loss(self),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def tree_loss(t: PartitionTree) -> int:
    a, b = t.loss_by_leaves(), t.loss_by_sum()
    if a != b:
        raise TreeError(f"loss formulas disagree: {a} != {b}")
    return a


# -- verification -----------------------------------------------------------------

@dataclass
class TreeReport:
    failures: list[str]
    loss: int
    opt: int
    mu: int | None
    height: int
    level_losses: dict[int, int]

    @property
    def ok(self) -> bool:
        return not self.failures


def _pairwise_disjoint(sets: Sequence[FakeSet], bbox) -> bool:
    xs, ys = overlay(sets, bbox)
    seen = 0
    for f in sets:
        m = region_mask(f, xs, ys)
        if m & seen:
            return False
        seen |= m
    return True


def verify_tree(
    t: PartitionTree,
    inst: Instance,
    basic_pred: Callable[[FakeSet], bool] | None = None,
    epsilon=None,
) -> TreeReport:
    """Run every structural and value check; failures come back by name."""
    fails: list[str] = []
    bbox = inst.bbox
    for k, n in enumerate(t.nodes):
        if n.opt != t.cache.value(induced_indices(inst, n.fake)):
            fails.append(f"stale opt at {k}")
        if not n.children:
            if basic_pred is not None and not basic_pred(n.fake):
                fails.append(f"non-basic leaf {k}")
            continue
        kids = [t.nodes[c].fake for c in n.children]
        if len(kids) == 2:
            ok = is_decomposition_pair(n.fake, *kids)
        elif len(kids) == 3:
            ok = is_decomposition_triple(n.fake, *kids)
        else:
            fails.append(f"arity {len(kids)} at {k}")
            continue
        if not ok:
            fails.append(f"invalid decomposition at {k}")
        if t.loss_at(k) < 0:
            fails.append(f"negative loss at {k}")
    try:
        loss = tree_loss(t)
    except TreeError:
        fails.append("loss formulas disagree")
        loss = t.loss_by_leaves()
    # antichains: each depth class, and the leaves
    root_opt = t.root.opt
    classes = list(t.levels().values()) + [t.leaves()]
    for vs in classes:
        if not _pairwise_disjoint([t.nodes[v].fake for v in vs], bbox):
            fails.append("disjointness")
            break
        if sum(t.nodes[v].opt for v in vs) > root_opt:
            fails.append("antichain optimum exceeds root")
            break
    if t.root.mu is None:
        t.assign_mu()
    for k, n in enumerate(t.nodes):
        if n.children and n.mu != sum(t.nodes[c].mu for c in n.children):
            fails.append(f"mu not additive at {k}")
    if epsilon is not None and t.root.mu < (1 - Fraction(epsilon) / 2) * (root_opt - loss):
        fails.append("root mu below (1-eps/2)(OPT - loss)")
    level_losses = {d: sum(t.loss_at(v) for v in vs) for d, vs in sorted(t.levels().items())}
    return TreeReport(fails, loss, root_opt, t.root.mu, t.height(), level_losses)


# -- parameters ---------------------------------------------------------------------

LOG43 = log(4 / 3)


def log43(x) -> float:
    return log(x) / LOG43


@dataclass(frozen=True)
class Parameters:
    """Parameter schedules at literal scale, kept in the log domain where large.

    The sections differ in log base: 4/3 for the single- and two-level
    algorithms, 2 for the multi-level one.
    """

    epsilon: float
    opt: int
    consts: Constants = DEFAULT
    delta: int = 3
    log2_n_override: int | None = None  # for probing scales far beyond any real OPT

    # single level
    @property
    def l_star(self) -> float:
        return 2 * self.consts.c3 * log43(max(self.opt, 2)) / self.epsilon

    @property
    def tau(self) -> float:
        return 64 * self.l_star**2

    # two levels
    @property
    def _s(self) -> float:
        return sqrt(log43(max(self.opt, 2)))

    @property
    def l1_two(self) -> float:
        return 100 * self.consts.c_tilde * self._s / self.epsilon

    @property
    def l2_two(self) -> float:
        return 100 * self.consts.c_tilde * self._s**2 / self.epsilon

    @property
    def log43_rho_two(self) -> float:
        return 2 * self._s

    @property
    def delta_two(self) -> int:
        return ceil(log43(self.l2_two / self.l1_two))

    @property
    def log43_eta_two(self) -> float:
        return log43(512) + (self.delta_two + 3) * log43(self.l2_two) + self._s

    def two_level_regime(self) -> bool:
        """The drop factor outgrows 32 L2^(delta+3), as the two-level analysis assumes."""
        return self._s > log43(32) + (self.delta_two + 3) * log43(self.l2_two)

    # many levels, base 2
    @property
    def log2_n(self) -> int:
        """log2 of the least power of two at or above OPT."""
        if self.log2_n_override is not None:
            return self.log2_n_override
        return max(1, ceil(log2(max(self.opt, 2))))

    @property
    def h_star(self) -> int:
        return max(1, floor(log2(self.log2_n)))

    def level_l(self, i: int) -> float:
        ll = log2(max(self.log2_n, 2))
        return self.consts.c_tilde * ll**3 * 2**i / self.epsilon

    @property
    def log2_eta(self) -> float:
        return log2(32) + (2 * self.delta + 4) * log2(self.level_l(self.h_star))

    def log2_rho(self, i: int) -> float:
        return self.log2_n / 2**i

    @property
    def h(self) -> int | None:
        """Largest level with rho_h > eta^320, or None below that regime."""
        best = None
        for i in range(1, self.h_star + 1):
            if self.log2_rho(i) > 320 * self.log2_eta:
                best = i
        return best

    @property
    def log2_tau_star(self) -> float | None:
        h = self.h
        return None if h is None or h < 2 else 3 * self.log2_rho(h - 1)

    def rho_bound_holds(self) -> bool:
        """rho_i >= (32 L_j^(2 delta + 4))^320 for i < h and j <= h."""
        h = self.h
        if h is None:
            return False
        return all(
            self.log2_rho(i) >= 320 * (log2(32) + (2 * self.delta + 4) * log2(self.level_l(j)))
            for i in range(1, h)
            for j in range(1, h + 1)
        )

    def opt_bound_holds(self, log2_opt_f: float) -> bool:
        """An instance with OPT >= rho_(h-1) has OPT >= 512 L_j^(2 delta + 4) for j <= h."""
        h = self.h
        if h is None or h < 2:
            return False
        if log2_opt_f < self.log2_rho(h - 1):
            return True
        return all(
            log2_opt_f >= log2(512) + (2 * self.delta + 4) * log2(self.level_l(j)) for j in range(1, h + 1)
        )

    def loss_schedule(self) -> list[float]:
        """Per-level loss bounds, built upward from the deepest level."""
        h = self.h
        if h is None or h < 2:
            return []
        ct = self.consts.c_tilde
        lam = [0.0] * h
        lam[h - 1] = 22 * ct * self.log2_eta / self.level_l(h - 1)
        for i in range(h - 2, 0, -1):
            lam[i] = 2 * lam[i + 1] + 12 * ct / self.level_l(i)
        return lam[1:]


def smallest_log2_n_with_levels(epsilon: float, consts: Constants = DEFAULT, levels: int = 2) -> int:
    """Least log2(N), scanning powers of two, that yields at least `levels` recursive levels."""
    for k in range(1, 4096):
        if (Parameters(epsilon, 2, consts, log2_n_override=2**k).h or 0) >= levels:
            return 2**k
    raise OverflowError("no regime found")


# -- builders -------------------------------------------------------------------------

MAX_NODES = 10_000


def _check_size(t: PartitionTree):
    if len(t) > MAX_NODES:
        raise TreeError(f"tree exceeded {MAX_NODES} nodes")


def build_section5_tree(
    inst: Instance,
    l_star: int,
    tau: int,
    seed: int = 0,
    cfg: Constants = DEFAULT,
    cache: OptCache | None = None,
) -> PartitionTree:
    """Split every leaf with optimum above tau by decompose_triple."""
    t = PartitionTree(inst, FakeSet.empty(inst.bbox), cache)
    todo = [0]
    while todo:
        v = todo.pop()
        n = t.nodes[v]
        if n.opt <= tau:
            continue
        s = decompose_triple(inst, n.fake, l_star, seed + v, cfg, t.cache)
        todo.extend(reversed(t.add_children(v, s.parts)))
        _check_size(t)
    return t


def build_cleanup_tree(
    inst: Instance,
    f: FakeSet,
    g: Grid,
    l1: int,
    l2: int,
    seed: int = 0,
    cfg: Constants = DEFAULT,
    cache: OptCache | None = None,
) -> PartitionTree:
    """Binary tree of grid-aligned pair cuts, until every live leaf has at most l2 fakes.

    A side whose optimum falls below 1/l1 of its parent's is replaced by the
    full box, so its region is empty. The analysis only ever discards the
    smaller side; at desk scale the rule is applied to both.
    """
    if not l2 < l1:
        raise ValueError("need l2 < l1")
    if l2 < 3:
        raise ValueError("pair cuts need l2 >= 3")
    if len(f) > l1:
        raise ValueError("|F| above l1")
    if cfg.strict and l2 <= cfg.c_tilde:
        raise ValueError("l2 must exceed the loss constant")
    t = PartitionTree(inst, f, cache)
    todo = [0]
    while todo:
        v = todo.pop()
        n = t.nodes[v]
        if len(n.fake) <= l2 or t.is_empty_region(v):
            continue
        s = decompose_pair_grid(inst, n.fake, g, seed + v, cfg, t.cache)
        big, small = s.parts  # larger optimum first
        if max(len(big), len(small)) >= len(n.fake):
            raise TreeError(f"pair cut made no progress at {len(n.fake)} fakes")
        kids, tags = [small, big], ["cleanup", "cleanup"]
        for k in (0, 1):
            # at desk scale the larger side can fall below the bar too
            if t.opt_of(kids[k]) * l1 < n.opt:
                kids[k], tags[k] = FakeSet.full(inst.bbox, "discard"), "discard"
        todo.extend(reversed(t.add_children(v, kids, tags)))
        _check_size(t)
    return t


def cleanup_delta(l1: int, l2: int) -> int:
    return ceil(log43(Fraction(l1, l2)))


def cleanup_leaf_failures(t: PartitionTree, l1: int, l2: int) -> list[str]:
    """Leaf clause and node bounds of a cleanup tree."""
    fails = []
    delta = cleanup_delta(l1, l2)
    root = t.root.opt
    for k, n in enumerate(t.nodes):
        if len(n.fake) > l1:
            fails.append(f"node {k} above l1")
        if n.children and len(n.children) != 2:
            fails.append(f"node {k} not binary")
        if n.children or t.is_empty_region(k):
            continue
        if len(n.fake) > l2:
            fails.append(f"leaf {k} above l2")
        if n.opt * l1 ** (delta + 2) < root:
            fails.append(f"leaf {k} optimum too small")
    return fails


@dataclass
class PhaseStats:
    stage1_height: int
    middle_ratios: list[Fraction]  # middle child optimum over parent optimum
    stage1_leaves: list[int]


def build_phase_tree(
    inst: Instance,
    f: FakeSet,
    g: Grid,
    l1: int,
    l2: int,
    drop_factor,
    seed: int = 0,
    cfg: Constants = DEFAULT,
    cache: OptCache | None = None,
) -> tuple[PartitionTree, PhaseStats]:
    """Triple cuts until optima drop by drop_factor, then cleanup trees down to l1 fakes.

    Stage one keeps the two larger thirds and discards the smallest when it
    holds under 1/l2 of its parent's optimum.
    """
    t = PartitionTree(inst, f, cache)
    target = Fraction(t.root.opt) / Fraction(drop_factor)
    ratios: list[Fraction] = []
    todo = [0]
    stage1: list[int] = []
    while todo:
        v = todo.pop()
        n = t.nodes[v]
        # a single rect cannot be split 3/4-balanced without losing it
        if t.is_empty_region(v) or n.opt < target or n.opt <= 1 or (v == 0 and drop_factor <= 1):
            stage1.append(v)
            continue
        s = decompose_triple_grid(inst, n.fake, l2, g, seed + v, cfg, t.cache)
        parts = sorted(s.parts, key=lambda q: (t.opt_of(q), q.encoding()))
        o = [t.opt_of(q) for q in parts]
        if n.opt:
            ratios.append(Fraction(o[1], n.opt))
        tags = ["split"] * 3
        if o[0] * l2 < n.opt:
            parts[0] = FakeSet.full(inst.bbox, "discard")
            tags[0] = "discard"
        todo.extend(reversed(t.add_children(v, parts, tags)))
        _check_size(t)
    height = max(t.depth(v) for v in stage1)
    for v in sorted(stage1):
        n = t.nodes[v]
        if t.is_empty_region(v) or len(n.fake) <= l1:
            continue
        sub = build_cleanup_tree(inst, n.fake, g, l2, l1, seed + 7919 * (v + 1), cfg, t.cache)
        t.graft(v, sub)
        _check_size(t)
    return t, PhaseStats(height, ratios, stage1)
