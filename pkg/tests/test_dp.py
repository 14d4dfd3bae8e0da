import random
from math import ceil, comb

import pytest
from hypothesis import given, settings, strategies as st

from misr.dp import (
    DPConfig,
    DPStateError,
    dp_solve,
    enumerate_family_section5,
    is_basic,
    lattice,
)
from misr.fakes import FakeSet, is_valid_fake_set
from misr.geometry import Rect
from misr.instance import generate
from misr.solvers import OptCache, approx_divide, approx_factor, is_independent
from misr.trees import build_section5_tree

from oracles import brute_mis, random_fake_set

KINDS = ("uniform-random", "disjoint-grid", "nested-stacks", "adversarial-strips")


def small(seed, lo=4, hi=8):
    return generate(KINDS[seed % 4], lo + seed % (hi - lo + 1), seed)


# -- basic sets -----------------------------------------------------------------------

def test_full_box_is_basic():
    inst = generate("disjoint-grid", 9, 0)
    assert is_basic(inst, FakeSet.full(inst.bbox), DPConfig(3, 0))


def test_empty_subinstance_is_basic():
    inst = generate("uniform-random", 6, 0)
    m = inst.bbox.x2
    f = FakeSet((Rect(1, 1, m - 1, m - 1, True),), inst.bbox)
    assert is_basic(inst, f, DPConfig(3, 0))


def test_basic_threshold_boundary():
    inst = generate("uniform-random", 8, 3)
    opt = brute_mis(inst.rects)
    root = FakeSet.empty(inst.bbox)
    assert is_basic(inst, root, DPConfig(3, opt))
    assert not is_basic(inst, root, DPConfig(3, opt - 1))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.integers(0, 6))
def test_approx_basic_bounds_optimum(seed, tau):
    inst = small(seed, 3, 10)
    f = random_fake_set(inst, seed % 3, random.Random(seed))
    if is_basic(inst, f, DPConfig(3, tau, basic_variant="approx")):
        from misr.fakes import induced_indices

        idx = induced_indices(inst, f)
        assert brute_mis([inst.rects[i] for i in idx]) <= approx_factor(len(idx)) * max(tau, 1) or not idx


# -- family -------------------------------------------------------------------------------

def test_zero_budget_family():
    inst = generate("uniform-random", 5, 0)
    assert list(enumerate_family_section5(inst, 0)) == [FakeSet.empty(inst.bbox)]


@pytest.mark.parametrize("mode,q", [("input", 3), ("quantile", 2), ("quantile", 0), ("relevant", 3)])
def test_single_rect_count(mode, q):
    inst = generate("uniform-random", 4, 1)
    xs, ys = lattice(inst, mode, q)
    fam = list(enumerate_family_section5(inst, 1, mode, q))
    assert len(fam) == 1 + comb(len(xs), 2) * comb(len(ys), 2)
    assert len({f.encoding() for f in fam}) == len(fam)


def test_two_coordinate_lattice():
    inst = generate("uniform-random", 4, 1)
    # with no interior lines the only fake rect is the box itself
    fam = list(enumerate_family_section5(inst, 1, "quantile", 0))
    assert fam == [FakeSet.empty(inst.bbox), FakeSet.full(inst.bbox)]


def test_pair_count_matches_brute_force():
    inst = generate("uniform-random", 5, 2)
    xs, ys = lattice(inst, "quantile", 2)
    rects = [(a, c, b, d) for a in xs for b in xs if a < b for c in ys for d in ys if c < d]

    def overlap(p, q):
        return p[0] < q[2] and q[0] < p[2] and p[1] < q[3] and q[1] < p[3]

    pairs = sum(1 for i in range(len(rects)) for j in range(i + 1, len(rects)) if not overlap(rects[i], rects[j]))
    fam = list(enumerate_family_section5(inst, 2, "quantile", 2))
    assert len(fam) == 1 + len(rects) + pairs
    assert all(is_valid_fake_set(f) for f in fam)


def test_relevant_lattice_contains_offsets():
    inst = generate("uniform-random", 3, 0)
    xs, _ = lattice(inst, "relevant")
    for r in inst.rects:
        assert {r.x1 - 1, r.x1, r.x1 + 1} <= set(xs) | {-1}


def test_state_cap():
    inst = generate("uniform-random", 6, 0)
    with pytest.raises(DPStateError) as err:
        dp_solve(inst, DPConfig(2, 0, coord_mode="input", max_states=50))
    assert err.value.count == 51


# -- the table -------------------------------------------------------------------------------

@pytest.mark.parametrize("seed", range(10))
def test_basic_root_is_exact(seed):
    inst = small(seed)
    opt = brute_mis(inst.rects)
    sol, stats = dp_solve(inst, DPConfig(3, opt))
    assert stats.root_basic
    assert sol.value == opt and is_independent(inst.rects, sol.indices)


@pytest.mark.parametrize("seed", range(8))
def test_every_entry_feasible(seed):
    inst = small(seed, 6, 8)
    sol, stats = dp_solve(inst, DPConfig(3, 1, enum_size=1))
    for key, s in stats.table.items():
        assert set(s) <= set(key)
        assert is_independent(inst.rects, s)


@pytest.mark.parametrize("seed", range(10))
def test_half_approximation_with_tree_family(seed):
    inst = small(seed)
    cache = OptCache(inst.rects)
    opt = brute_mis(inst.rects)
    t = build_section5_tree(inst, 6, 1, seed, cache=cache)
    seeds = tuple(n.fake for n in t.nodes)
    sol, _ = dp_solve(inst, DPConfig(6, 1, epsilon=0.5, enum_size=1, seeds=seeds), cache)
    assert ceil(0.5 * opt) <= sol.value <= opt
    assert is_independent(inst.rects, sol.indices)
    assert sol.value >= t.assign_mu()


@pytest.mark.parametrize("seed", range(6))
def test_monotone_in_family(seed):
    inst = small(seed, 5, 7)
    cache = OptCache(inst.rects)
    seeds = tuple(n.fake for n in build_section5_tree(inst, 6, 1, seed, cache=cache).nodes)
    values = [
        dp_solve(inst, DPConfig(6, 1, **kw), cache)[0].value
        for kw in ({"enum_size": 0}, {"enum_size": 1}, {"enum_size": 1, "seeds": seeds[: len(seeds) // 2]}, {"enum_size": 1, "seeds": seeds})
    ]
    assert values == sorted(values)


@pytest.mark.parametrize("seed", range(4))
def test_monotone_in_tau_and_lstar(seed):
    inst = small(seed, 6, 8)
    cache = OptCache(inst.rects)
    by_tau = [dp_solve(inst, DPConfig(2, tau, enum_size=1), cache)[0].value for tau in range(0, 5)]
    assert by_tau == sorted(by_tau)
    by_l = [dp_solve(inst, DPConfig(l, 1, quantiles=2), cache)[0].value for l in (0, 1, 2)]
    assert by_l == sorted(by_l)


@pytest.mark.parametrize("seed", range(4))
def test_key_collapse_never_hurts(seed):
    inst = small(seed, 5, 7)
    cache = OptCache(inst.rects)
    a = dp_solve(inst, DPConfig(2, 1, quantiles=2), cache)[0]
    b = dp_solve(inst, DPConfig(2, 1, quantiles=2, key_mode="region"), cache)[0]
    assert a.value >= b.value
    assert is_independent(inst.rects, b.indices)


def test_output_is_deterministic():
    inst = generate("uniform-random", 7, 4)
    cfg = DPConfig(2, 1, quantiles=2)
    assert dp_solve(inst, cfg)[0] == dp_solve(inst, cfg)[0]
