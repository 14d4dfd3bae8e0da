import random

import pytest
from hypothesis import given, settings, strategies as st

from misr.geometry import Rect
from misr.instance import (
    Instance,
    canonicalize,
    dump_json,
    generate,
    instance_from_json,
    kernelize,
)
from misr.solvers import exact_mis, is_independent

from oracles import brute_mis


def raw_rects(rng, n, span=6, floats=False):
    out = []
    for _ in range(n):
        x1, x2 = sorted(rng.sample(range(span + 1), 2))
        y1, y2 = sorted(rng.sample(range(span + 1), 2))
        if floats:
            x1, x2 = x1 / 3, x2 / 3
        out.append(Rect(x1, y1, x2, y2))
    return out


def test_disjoint_floats_compress_to_ranks():
    inst, _ = canonicalize([Rect(0.5, 0.5, 1.5, 1.5), Rect(2.25, 2.25, 3.0, 3.0)])
    assert {c for r in inst.rects for c in (r.x1, r.x2)} == {1, 2, 3, 4}
    assert inst.rects == (Rect(1, 1, 2, 2), Rect(3, 3, 4, 4))
    assert inst.bbox == Rect(0, 0, 5, 5, True)


def test_shared_coordinate_made_distinct():
    raw = [Rect(0, 0, 2, 2), Rect(2, 0, 4, 2), Rect(0, 1, 3, 3)]
    inst, _ = canonicalize(raw)
    assert inst.is_canonical()
    assert inst.adjacency() == Instance(tuple(raw), Rect(0, 0, 9, 9, True)).adjacency()


def test_canonical_input_is_structurally_fixed():
    inst = generate("uniform-random", 8, 2)
    again, _ = canonicalize(inst.rects)
    assert again.adjacency() == inst.adjacency()


def test_zero_area_rejected():
    with pytest.raises(ValueError):
        canonicalize([(1, 1, 1, 3)])


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10**9), st.integers(1, 15), st.booleans())
def test_canonicalize_preserves_intersection_graph(seed, n, floats):
    raw = raw_rects(random.Random(seed), n, floats=floats)
    inst, _ = canonicalize(raw)
    assert inst.is_canonical()
    assert inst.adjacency() == Instance(tuple(raw), inst.bbox).adjacency()


def test_generators_are_deterministic():
    assert generate("uniform-random", 10, 7) == generate("uniform-random", 10, 7)
    assert dump_json(generate("uniform-random", 10, 7).to_json()) == dump_json(
        generate("uniform-random", 10, 7).to_json()
    )


def test_disjoint_grid_opt():
    inst = generate("disjoint-grid", 9, 4)
    assert exact_mis(inst).value == 9


def test_nested_stacks_opt():
    inst = generate("nested-stacks", 5, 1)
    assert inst.n == 5
    assert exact_mis(inst).value == 1


def test_strips_are_canonical():
    inst = generate("adversarial-strips", 8, 0)
    assert inst.is_canonical()
    assert exact_mis(inst).value == 4


def test_unknown_kind():
    with pytest.raises(ValueError):
        generate("spiral", 3, 0)


def test_json_round_trip():
    inst = generate("uniform-random", 6, 3)
    assert instance_from_json(inst.to_json()) == inst


def test_single_rect_kernel():
    inst = generate("uniform-random", 1, 0)
    kernel, lift = kernelize(inst)
    assert kernel.n == 1
    assert kernel.rects[0].contains(inst.rects[0])
    assert lift.lift([0]) == (0,)


def _check_kernel(inst):
    kernel, lift = kernelize(inst)
    for k, group in enumerate(lift.mapping):
        for i in group:
            assert kernel.rects[k].contains(inst.rects[i])
    w = exact_mis(inst).value
    kw = exact_mis(kernel)
    lifted = lift.lift(kw.indices)
    assert is_independent(inst.rects, lifted)
    assert len(lifted) == kw.value
    assert kw.value >= -(-w // 6561)
    assert len(set(kernel.rects)) <= (5 * w + 2) ** 4
    return w, kw.value


def test_kernel_seed_3():
    _check_kernel(generate("uniform-random", 10, 3))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**9), st.integers(1, 12), st.sampled_from(["uniform-random", "disjoint-grid", "adversarial-strips"]))
def test_kernel_properties(seed, n, kind):
    _check_kernel(generate(kind, n, seed))
