import json
import random
from fractions import Fraction
from math import ceil, log

import pytest

from misr.config import DEFAULT
from misr.fakes import FakeSet, induced_indices
from misr.geometry import Rect
from misr.grids import build_rho_accurate_grid
from misr.instance import generate
from misr.solvers import OptCache
from misr.trees import (
    Parameters,
    PartitionTree,
    TreeError,
    build_cleanup_tree,
    build_phase_tree,
    build_section5_tree,
    cleanup_delta,
    cleanup_leaf_failures,
    log43,
    smallest_log2_n_with_levels,
    tree_loss,
    verify_tree,
)

from oracles import brute_mis, random_fake_set


def brute_opt(inst, f):
    return brute_mis([inst.rects[i] for i in induced_indices(inst, f)])


# -- loss accounting -------------------------------------------------------------------

def test_single_node_loss():
    inst = generate("uniform-random", 6, 0)
    assert tree_loss(PartitionTree(inst, FakeSet.empty(inst.bbox))) == 0


def test_two_empty_leaves_lose_everything():
    inst = generate("disjoint-grid", 9, 0)
    t = PartitionTree(inst, FakeSet.empty(inst.bbox))
    full = FakeSet.full(inst.bbox)
    t.add_children(0, [full, full])
    assert tree_loss(t) == 9
    assert verify_tree(t, inst).ok


@pytest.mark.parametrize("seed", range(4))
def test_loss_formulas_on_built_trees(seed):
    inst = generate("uniform-random", 8 + seed, seed)
    t = build_section5_tree(inst, 8, 1, seed)
    # node optima recomputed by brute force, independently of the cache
    opts = [brute_opt(inst, n.fake) for n in t.nodes]
    assert opts == [n.opt for n in t.nodes]
    by_sum = sum(opts[v] - sum(opts[c] for c in t.nodes[v].children) for v in t.inner())
    by_leaves = opts[0] - sum(opts[v] for v in t.leaves())
    assert by_sum == by_leaves == tree_loss(t)


# -- verification ------------------------------------------------------------------------

def test_section5_tree_verifies():
    inst = generate("uniform-random", 10, 1)
    t = build_section5_tree(inst, 8, 2, 1)
    rep = verify_tree(t, inst, lambda f: t.opt_of(f) <= 2, epsilon=0.5)
    assert rep.ok, rep.failures
    assert sum(t.nodes[v].opt for v in t.leaves()) <= t.root.opt
    assert rep.mu == t.root.opt - rep.loss  # exact leaf solver


def test_overlapping_children_are_reported():
    inst = generate("disjoint-grid", 9, 0)
    t = PartitionTree(inst, FakeSet.empty(inst.bbox))
    m = inst.bbox.x2
    left = FakeSet((Rect(m // 2, 0, m, m, True),), inst.bbox)  # keeps the left half
    wide = FakeSet((Rect(m - 2, 0, m, m, True),), inst.bbox)  # keeps almost everything
    t.add_children(0, [left, wide])
    rep = verify_tree(t, inst)
    assert "invalid decomposition at 0" in rep.failures
    assert "disjointness" in rep.failures


def test_non_basic_leaf_reported():
    inst = generate("disjoint-grid", 9, 0)
    t = PartitionTree(inst, FakeSet.empty(inst.bbox))
    assert "non-basic leaf 0" in verify_tree(t, inst, lambda f: False).failures


def test_graft_keeps_structure():
    inst = generate("uniform-random", 10, 1)
    a = build_section5_tree(inst, 8, 2, 1)
    t = PartitionTree(inst, FakeSet.empty(inst.bbox), a.cache)
    t.graft(0, a)
    assert t.dumps() == a.dumps()
    with pytest.raises(TreeError):
        t.graft(0, a)


def test_dump_is_deterministic():
    inst = generate("uniform-random", 9, 3)
    d1 = build_section5_tree(inst, 8, 1, 3).dumps()
    d2 = build_section5_tree(inst, 8, 1, 3).dumps()
    assert d1 == d2
    data = json.loads(d1)
    assert data["loss"] == data["nodes"][0]["opt"] - sum(n["opt"] for n in data["nodes"] if not n["children"])


# -- the single-level tree ----------------------------------------------------------------

def test_basic_root_gives_single_node():
    inst = generate("uniform-random", 8, 0)
    t = build_section5_tree(inst, 8, 100, 0)
    assert len(t) == 1 and tree_loss(t) == 0


def test_depth_on_disjoint_grid():
    inst = generate("disjoint-grid", 16, 0)
    t = build_section5_tree(inst, 12, 4, 0)
    rep = verify_tree(t, inst, lambda f: t.opt_of(f) <= 4)
    assert rep.ok, rep.failures
    # optima shrink by 3/4 per level, so few depth classes are non-empty
    assert len(rep.level_losses) <= ceil(log43(16))


@pytest.mark.parametrize("seed", range(4))
def test_per_level_loss(seed):
    inst = generate(("uniform-random", "adversarial-strips")[seed % 2], 12, seed)
    l_star = 10
    t = build_section5_tree(inst, l_star, 2, seed)
    rep = verify_tree(t, inst)
    for d, lost in rep.level_losses.items():
        assert lost * l_star <= DEFAULT.c3 * t.root.opt
    # the balance every split is built for
    for v in t.inner():
        assert all(4 * t.nodes[c].opt <= 3 * t.nodes[v].opt for c in t.nodes[v].children)


# -- cleanup trees --------------------------------------------------------------------------

def _cleanup_case(seed, extra=3):
    inst = generate(("uniform-random", "disjoint-grid", "nested-stacks", "adversarial-strips")[seed % 4], 10 + seed % 4, seed)
    f = random_fake_set(inst, 8 + extra + seed % 4, random.Random(seed))
    cache = OptCache(inst.rects)
    g = build_rho_accurate_grid(inst, f, 4, cache=cache)
    return inst, f, g, cache


def test_cleanup_small_boundary_is_single_node():
    inst, f, g, cache = _cleanup_case(0)
    t = build_cleanup_tree(inst, f, g, len(f) + 2, len(f), 0, cache=cache)
    assert len(t) == 1


@pytest.mark.parametrize("seed", range(6))
def test_cleanup_tree_clauses(seed):
    inst, f, g, cache = _cleanup_case(seed)
    l1, l2 = len(f), 8
    t = build_cleanup_tree(inst, f, g, l1, l2, seed, cache=cache)
    assert not cleanup_leaf_failures(t, l1, l2)
    assert verify_tree(t, inst).ok
    assert all(g.aligned(q) for n in t.nodes for q in n.fake.rects)
    assert tree_loss(t) * l2 <= 12 * DEFAULT.c_tilde * t.root.opt
    for v in t.leaves():
        if t.nodes[v].tag == "discard":
            assert t.is_empty_region(v) and t.nodes[v].fake.rects == (inst.bbox,)
        elif not t.is_empty_region(v):
            delta = cleanup_delta(l1, l2)
            assert t.nodes[v].opt * l1 ** (delta + 2) >= t.root.opt


def test_cleanup_discards_small_side():
    # a seed where one side of some cut holds under 1/l1 of its parent
    found = False
    for seed in range(8):
        inst, f, g, cache = _cleanup_case(seed)
        t = build_cleanup_tree(inst, f, g, len(f), 8, seed, cache=cache)
        for v in t.leaves():
            if t.nodes[v].tag == "discard":
                found = True
                parent = t.nodes[t.nodes[v].parent]
                assert t.nodes[v].opt == 0 and parent.children[0] == v
    assert found


def test_cleanup_rejects_bad_parameters():
    inst, f, g, cache = _cleanup_case(0)
    with pytest.raises(ValueError):
        build_cleanup_tree(inst, f, g, len(f), len(f), cache=cache)
    with pytest.raises(ValueError):
        build_cleanup_tree(inst, f, g, len(f), 2, cache=cache)
    with pytest.raises(ValueError):
        build_cleanup_tree(inst, f, g, len(f) - 1, 3, cache=cache)


# -- phase trees -----------------------------------------------------------------------------

def _phase_case(seed):
    inst = generate(("uniform-random", "disjoint-grid", "nested-stacks", "adversarial-strips")[seed % 4], 10 + seed % 5, seed)
    f = random_fake_set(inst, 5 + seed % 2, random.Random(seed))
    cache = OptCache(inst.rects)
    return inst, f, build_rho_accurate_grid(inst, f, 4, cache=cache), cache


def test_phase_tree_without_drop_is_cleanup_only():
    inst, f, g, cache = _phase_case(1)
    t, st = build_phase_tree(inst, f, g, 4, 12, 1, 1, cache=cache)
    assert st.middle_ratios == [] and st.stage1_height == 1
    assert all(n.tag in ("root", "cleanup", "discard") for n in t.nodes)


@pytest.mark.parametrize("seed", [1, 3, 5, 8, 9, 11])
def test_phase_tree_leaves(seed):
    inst, f, g, cache = _phase_case(seed)
    l1, l2, drop = 6, 12, 2
    t, st = build_phase_tree(inst, f, g, l1, l2, drop, seed, cache=cache)
    assert verify_tree(t, inst).ok
    target = Fraction(t.root.opt, drop)
    for v in t.leaves():
        n = t.nodes[v]
        if t.is_empty_region(v):
            continue
        assert len(n.fake) <= l1
        assert n.opt < target or n.opt <= 1
    # optima shrink by 3/4 per stage-one level
    assert st.stage1_height <= 1 + ceil(log(drop * t.root.opt) / log(4 / 3))


@pytest.mark.parametrize("seed", [1, 3, 5, 9])
def test_middle_child_share(seed):
    # the middle third keeps 1/16 whenever the cut is balanced and loses at most 1/8
    inst, f, g, cache = _phase_case(seed)
    t, _ = build_phase_tree(inst, f, g, 6, 12, 2, seed, cache=cache)
    for v in t.inner():
        n = t.nodes[v]
        if len(n.children) != 3:
            continue
        o = sorted(t.nodes[c].opt for c in n.children)
        if 4 * o[2] <= 3 * n.opt and 8 * t.loss_at(v) <= n.opt:
            assert 16 * o[1] >= n.opt


# -- parameters --------------------------------------------------------------------------------

def test_single_level_parameters():
    p = Parameters(0.5, 1024)
    assert p.l_star == pytest.approx(2 * DEFAULT.c3 * log(1024) / log(4 / 3) / 0.5)
    assert p.tau == pytest.approx(64 * p.l_star**2)


def test_two_level_regime_needs_huge_opt():
    assert not Parameters(0.5, 10**9).two_level_regime()
    assert Parameters(0.5, 10**9).delta_two == ceil(log43(Parameters(0.5, 10**9)._s))


def test_level_schedule():
    p = Parameters(0.5, 10**6)
    assert p.h is None and not p.rho_bound_holds()
    n = smallest_log2_n_with_levels(0.5)
    q = Parameters(0.5, 2, log2_n_override=n)
    assert q.h >= 2 and q.rho_bound_holds()
    assert Parameters(0.5, 2, log2_n_override=n // 2).h in (None, 1)
    # each level doubles the boundary budget
    assert q.level_l(3) == pytest.approx(2 * q.level_l(2))
    # rho_i is the square root of rho_(i-1)
    assert q.log2_rho(3) == pytest.approx(q.log2_rho(2) / 2)
    lam = q.loss_schedule()
    assert lam[-1] == pytest.approx(22 * DEFAULT.c_tilde * q.log2_eta / q.level_l(q.h - 1))
    for i in range(len(lam) - 1):
        assert lam[i] == pytest.approx(2 * lam[i + 1] + 12 * DEFAULT.c_tilde / q.level_l(i + 1))


def test_opt_bound():
    n = smallest_log2_n_with_levels(0.5)
    q = Parameters(0.5, 2, log2_n_override=n)
    assert q.opt_bound_holds(q.log2_rho(q.h - 1))
    assert q.opt_bound_holds(n)
