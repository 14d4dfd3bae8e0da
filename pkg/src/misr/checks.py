"""Seeded invariant sweeps behind `misr verify`.

Each suite runs a number of trials and yields one Check per measured
property. A failed check never raises; callers decide what to do with it.
Sub-seeds come from a stable hash of (suite, seed, trial), so a trial can
be rerun on its own.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from math import ceil
from typing import Callable, Iterator

from .config import DEFAULT, Constants
from .dp import DPConfig, dp_solve
from .fakes import FakeSet, induced_indices, is_decomposition_pair, is_decomposition_triple
from .geometry import Rect, RectilinearPolygon, interiors_overlap, is_aligned, tile_complement, tile_polygon, trace_outline
from .grids import accuracy_failures, build_rho_accurate_grid, refine_aligned_grid
from .instance import KINDS, canonicalize, generate, kernelize
from .partitions import build_r_good_partition, r_good_failures
from .separators import decompose_pair_grid, decompose_triple, decompose_triple_grid, reduce_limit
from .solvers import OptCache, approx_divide, approx_factor, exact_mis, is_independent
from .trees import build_cleanup_tree, build_section5_tree, cleanup_leaf_failures, verify_tree

TEST_L_STAR = 6  # smallest boundary budget for which desk-scale trees always build
ENUM_LIMIT = 14  # largest n checked against subset enumeration


def derive_seed(*parts) -> int:
    digest = hashlib.sha256(":".join(map(str, parts)).encode()).digest()
    return int.from_bytes(digest[:4], "big")


@dataclass(frozen=True)
class Check:
    suite: str
    trial: int
    name: str
    ok: bool
    measured: str = ""

    def to_row(self) -> dict:
        return {"suite": self.suite, "trial": self.trial, "check": self.name, "ok": int(self.ok), "measured": self.measured}


# -- random inputs -------------------------------------------------------------------

def random_fake_squares(inst, k: int, rng: random.Random, size: int = 1) -> FakeSet:
    """Up to k internally disjoint closed squares inside the box."""
    m = inst.bbox.x2
    out: list[Rect] = []
    for _ in range(200 * k):
        if len(out) >= k:
            break
        x, y = rng.randrange(0, m - size + 1), rng.randrange(0, m - size + 1)
        q = Rect(x, y, x + size, y + size, True)
        if not any(interiors_overlap(q, o) for o in out):
            out.append(q)
    return FakeSet(tuple(out), inst.bbox)


def random_polygon(rng: random.Random, cells: int, span: int = 8, max_corners: int = 20) -> RectilinearPolygon:
    """Outline of a hole-free polyomino on a randomly stretched lattice."""
    while True:
        grown = {(span // 2, span // 2)}
        ticks = list(range(span + 1))
        for _ in range(20 * cells):
            if len(grown) >= cells:
                break
            i, j = rng.choice(sorted(grown))
            di, dj = rng.choice(((1, 0), (-1, 0), (0, 1), (0, -1)))
            nb = (i + di, j + dj)
            if nb in grown or not (0 <= nb[0] < span and 0 <= nb[1] < span):
                continue
            if trace_outline(ticks, ticks, grown | {nb}) is not None:
                grown.add(nb)
        xs = [0]
        ys = [0]
        for _ in range(span):
            xs.append(xs[-1] + rng.randint(1, 3))
            ys.append(ys[-1] + rng.randint(1, 3))
        walk = trace_outline(xs, ys, grown)
        if walk is not None and len(walk) <= max_corners:
            return RectilinearPolygon(walk)
        cells = max(1, cells - 1)


def _instance(suite: str, n: int, seed: int, trial: int):
    s = derive_seed(suite, seed, trial)
    return generate(KINDS[s % len(KINDS)], n, s), s


def _enum_mis(rects) -> int:
    best = 0
    for k in range(1, len(rects) + 1):
        if not any(all(not interiors_overlap(a, b) for a, b in combinations(sub, 2)) for sub in combinations(rects, k)):
            break
        best = k
    return best


def _tiles_ok(tiles, inside: Callable[[int, int], bool], box: Rect) -> bool:
    """Every half-integer sample of box is covered once when inside, else never."""
    for x in range(box.x1, box.x2):
        for y in range(box.y1, box.y2):
            px, py = 2 * x + 1, 2 * y + 1
            hits = sum(2 * t.x1 < px < 2 * t.x2 and 2 * t.y1 < py < 2 * t.y2 for t in tiles)
            if hits != (1 if inside(px, py) else 0):
                return False
    return True


# -- suites ---------------------------------------------------------------------------

def suite_geometry(n: int, trials: int, seed: int, cfg: Constants) -> Iterator[Check]:
    for t in range(trials):
        rng = random.Random(derive_seed("geometry", seed, t))
        p = random_polygon(rng, rng.randint(1, 12))
        L = len(p)
        bb = p.bbox()
        box = Rect(bb.x1 - rng.randint(0, 2), bb.y1 - rng.randint(0, 2), bb.x2 + rng.randint(0, 2), bb.y2 + rng.randint(0, 2), True)
        z = p.alignment_set()
        inside = lambda x, y: p.contains_point(x / 2, y / 2)  # noqa: E731
        tiles = tile_polygon(p)
        yield Check("geometry", t, "tile_polygon count", len(tiles) <= max(L - 3, 1), f"{len(tiles)}/{L}")
        yield Check("geometry", t, "tile_polygon union", _tiles_ok(tiles, inside, bb))
        yield Check("geometry", t, "tile_polygon aligned", all(is_aligned(r, z) for r in tiles))
        comp = tile_complement(p, box)
        zb = type(z)(z.xs + (box.x1, box.x2), z.ys + (box.y1, box.y2))
        yield Check("geometry", t, "tile_complement count", len(comp) <= L + 2, f"{len(comp)}/{L}")
        yield Check("geometry", t, "tile_complement union", _tiles_ok(comp, lambda x, y: not inside(x, y), box))
        yield Check("geometry", t, "tile_complement aligned", all(is_aligned(r, zb) for r in comp))


def suite_instance(n: int, trials: int, seed: int, cfg: Constants) -> Iterator[Check]:
    for t in range(trials):
        rng = random.Random(derive_seed("instance", seed, t))
        raw = []
        for _ in range(n):
            x, y = rng.randint(0, 6), rng.randint(0, 6)  # a small range forces ties
            raw.append((x, y, x + rng.randint(1, 4), y + rng.randint(1, 4)))
        inst, _ = canonicalize(raw)
        before = [[i != j and interiors_overlap(Rect(*a), Rect(*b)) for j, b in enumerate(raw)] for i, a in enumerate(raw)]
        yield Check("instance", t, "canonical adjacency", inst.adjacency() == before and inst.is_canonical())
        inst, _ = _instance("instance", n, seed, t)
        kernel, lift = kernelize(inst)
        contained = all(kernel.rects[k].contains(inst.rects[i]) for k, grp in enumerate(lift.mapping) for i in grp)
        yield Check("instance", t, "kernel containment", contained)
        opt = exact_mis(inst).value
        ks = exact_mis(kernel)
        yield Check("instance", t, "kernel lift independent", is_independent(inst.rects, lift.lift(ks.indices)))
        yield Check("instance", t, "kernel optimum", ks.value >= -(-opt // 6561), f"{ks.value}/{opt}")
        yield Check("instance", t, "kernel distinct count", len(set(kernel.rects)) <= (5 * opt + 2) ** 4, str(kernel.n))


def suite_solvers(n: int, trials: int, seed: int, cfg: Constants) -> Iterator[Check]:
    for t in range(trials):
        inst, _ = _instance("solvers", n, seed, t)
        sol = exact_mis(inst)
        yield Check("solvers", t, "exact independent", is_independent(inst.rects, sol.indices))
        if inst.n <= ENUM_LIMIT:
            ref = _enum_mis(inst.rects)
            yield Check("solvers", t, "exact matches enumeration", sol.value == ref, f"{sol.value}/{ref}")
        a = approx_divide(inst)
        ok = is_independent(inst.rects, a.indices) and a.value * approx_factor(inst.n) >= sol.value
        yield Check("solvers", t, "approx_divide guarantee", ok, f"{a.value}/{sol.value}")


def suite_partitions(n: int, trials: int, seed: int, cfg: Constants) -> Iterator[Check]:
    for t in range(trials):
        inst, s = _instance("partitions", n, seed, t)
        r = (4, 8, 16)[t % 3]
        f = random_fake_squares(inst, s % 4, random.Random(s))
        opt = OptCache(inst.rects).solve(induced_indices(inst, f))
        p = build_r_good_partition(inst, f, opt, max(r, len(f), 3), s, cfg)
        bad = r_good_failures(p, f, [inst.rects[i] for i in opt.indices], p.r, cfg.c_star * p.r)
        yield Check("partitions", t, f"r-good r={p.r}", not bad, "; ".join(bad) or f"{len(p.cells)} cells")


def _split_checks(suite, t, inst, f, s, cache, l_limit, loss_const, l_star):
    opt = cache.value(induced_indices(inst, f))
    vals = [cache.value(induced_indices(inst, q)) for q in s.parts]
    pred = is_decomposition_triple if len(s.parts) == 3 else is_decomposition_pair
    yield Check(suite, t, "decomposition predicate", pred(f, *s.parts))
    yield Check(suite, t, "boundary bound", max(map(len, s.parts)) <= l_limit, f"{max(map(len, s.parts))}/{l_limit}")
    lost = opt - sum(vals)
    yield Check(suite, t, "loss bound", 0 <= lost and lost * l_star <= loss_const * opt, f"{lost}/{opt}")


def suite_separators(n: int, trials: int, seed: int, cfg: Constants) -> Iterator[Check]:
    l_star = 12
    for t in range(trials):
        inst, s = _instance("separators", n, seed, t)
        cache = OptCache(inst.rects)
        f = random_fake_squares(inst, 4 + s % 3, random.Random(s))
        opt = cache.value(induced_indices(inst, f))
        sp = decompose_triple(inst, f, l_star, s, cfg, cache)
        yield from _split_checks("separators", t, inst, f, sp, cache, l_star, cfg.c3, l_star)
        balanced = all(4 * cache.value(induced_indices(inst, q)) <= 3 * opt for q in sp.parts)
        yield Check("separators", t, "3/4 balance", balanced or opt <= 1)
        g = build_rho_accurate_grid(inst, f, 2, cfg, cache)
        for name, sp in (
            ("triple grid", decompose_triple_grid(inst, f, l_star, g, s, cfg, cache)),
            ("pair grid", decompose_pair_grid(inst, f, g, s, cfg, cache)),
        ):
            if name == "triple grid":
                limit, l_loss = 3 * l_star / 4, l_star
            else:
                # the 3L/4 clause needs L above c~, so the cut's own limit is checked
                limit, l_loss = reduce_limit(len(f), sp.r, cfg), len(f)
                big = max(map(len, sp.parts))
                yield Check("separators", t, "pair grid: 3L/4 reached (info)", True, str(big <= ceil(3 * len(f) / 4)))
            for c in _split_checks("separators", t, inst, f, sp, cache, limit, cfg.c_tilde, l_loss):
                yield Check(c.suite, c.trial, f"{name}: {c.name}", c.ok, c.measured)
            aligned = all(g.aligned(q) for part in sp.parts for q in part.rects)
            yield Check("separators", t, f"{name}: aligned", aligned)


def suite_grids(n: int, trials: int, seed: int, cfg: Constants) -> Iterator[Check]:
    for t in range(trials):
        inst, s = _instance("grids", n, seed, t)
        cache = OptCache(inst.rects)
        f = random_fake_squares(inst, s % 3, random.Random(s))
        opt = cache.value(induced_indices(inst, f))
        grids = {}
        for rho in sorted({Fraction(1), Fraction(2), max(Fraction(1), Fraction(opt, 2)), Fraction(max(1, opt))}):
            g = build_rho_accurate_grid(inst, f, rho, cfg, cache)
            grids[rho] = g
            bad = accuracy_failures(g, inst, f, rho, cache)
            yield Check("grids", t, f"accurate rho={rho}", not bad, "; ".join(bad) or str(g.size))
        top = max(grids)
        for rho in grids:
            h = refine_aligned_grid(grids[top], inst, f, rho, cfg, cache)
            subset = set(h.vlines) <= set(grids[top].vlines) and set(h.hlines) <= set(grids[top].hlines)
            ok = subset and not accuracy_failures(h, inst, f, rho, cache)
            yield Check("grids", t, f"refine rho={rho}", ok, str(h.size))


def suite_trees(n: int, trials: int, seed: int, cfg: Constants) -> Iterator[Check]:
    for t in range(trials):
        inst, s = _instance("trees", n, seed, t)
        cache = OptCache(inst.rects)
        tree = build_section5_tree(inst, TEST_L_STAR, 1, s, cfg, cache)
        rep = verify_tree(tree, inst, lambda f: cache.value(induced_indices(inst, f)) <= 1, epsilon=0.5)
        yield Check("trees", t, "section5 tree", rep.ok, "; ".join(rep.failures) or f"loss {rep.loss}/{rep.opt}")
        # cleanup from a boundary of 11 to 14 unit squares down to 8
        f = random_fake_squares(inst, 11 + s % 4, random.Random(s))
        g = build_rho_accurate_grid(inst, f, 4, cfg, cache)
        l1, l2 = len(f), 8
        if l1 <= l2:
            continue
        ct = build_cleanup_tree(inst, f, g, l1, l2, s, cfg, cache)
        bad = cleanup_leaf_failures(ct, l1, l2) + verify_tree(ct, inst).failures
        loss = ct.loss_by_leaves()
        yield Check("trees", t, "cleanup tree", not bad, "; ".join(bad) or f"loss {loss}/{ct.root.opt}")
        yield Check("trees", t, "cleanup loss", loss * l2 <= 12 * cfg.c_tilde * ct.root.opt, f"{loss}/{ct.root.opt}")


def seeded_dp_config(inst, seed: int, cfg: Constants = DEFAULT, cache: OptCache | None = None, epsilon=0.5, l_star=TEST_L_STAR, tau=1):
    """A quantile lattice plus the fake sets of a single-level tree."""
    tree = build_section5_tree(inst, l_star, tau, seed, cfg, cache)
    seeds = tuple(node.fake for node in tree.nodes)
    return DPConfig(l_star, tau, epsilon, enum_size=1, seeds=seeds), tree


def suite_dp(n: int, trials: int, seed: int, cfg: Constants) -> Iterator[Check]:
    n = min(n, 8)
    for t in range(trials):
        inst, s = _instance("dp", n, seed, t)
        cache = OptCache(inst.rects)
        opt = cache.value(range(inst.n))
        exact, _ = dp_solve(inst, DPConfig(TEST_L_STAR, opt), cache)
        yield Check("dp", t, "tau >= OPT is exact", exact.value == opt, f"{exact.value}/{opt}")
        dcfg, tree = seeded_dp_config(inst, s, cfg, cache)
        sol, _ = dp_solve(inst, dcfg, cache)
        ok = is_independent(inst.rects, sol.indices) and 2 * sol.value >= opt
        yield Check("dp", t, "half approximation", ok, f"{sol.value}/{opt}")
        mu = tree.assign_mu()
        yield Check("dp", t, "tree mu below dp", mu <= sol.value, f"{mu}/{sol.value}")


SUITES = {
    "geometry": suite_geometry,
    "instance": suite_instance,
    "solvers": suite_solvers,
    "partitions": suite_partitions,
    "separators": suite_separators,
    "grids": suite_grids,
    "trees": suite_trees,
    "dp": suite_dp,
}


def run_suite(name: str, n: int, trials: int, seed: int, cfg: Constants = DEFAULT) -> list[Check]:
    names = list(SUITES) if name == "all" else [name]
    out = []
    for s in names:
        out.extend(SUITES[s](n, trials, seed, cfg))
    return out
