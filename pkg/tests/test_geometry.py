import random

import pytest
from hypothesis import given, settings, strategies as st

from misr.geometry import (
    AlignmentPointSet,
    Rect,
    RectilinearPolygon,
    intersects,
    is_aligned,
    tile_cells,
    tile_complement,
    tile_polygon,
)

from oracles import check_tiling, polygon_has, random_polygon


def test_open_rects_sharing_an_edge_do_not_intersect():
    assert not intersects(Rect(0, 0, 2, 2), Rect(2, 0, 4, 2))


def test_containment_intersects():
    assert intersects(Rect(0, 0, 3, 3), Rect(1, 1, 2, 2))


def test_closed_rects_touch_on_boundary():
    assert intersects(Rect(0, 0, 2, 2, True), Rect(2, 0, 4, 2, True))


def test_zero_area_rejected():
    with pytest.raises(ValueError):
        Rect(1, 1, 1, 3)


rects = st.builds(
    lambda a, b, c, d, closed: Rect(min(a, b), min(c, d), max(a, b) + (a == b), max(c, d) + (c == d), closed),
    st.integers(0, 9), st.integers(0, 9), st.integers(0, 9), st.integers(0, 9), st.booleans(),
)


@given(rects, rects)
def test_intersects_symmetric(a, b):
    assert intersects(a, b) == intersects(b, a)


@given(rects)
def test_intersects_reflexive(a):
    assert intersects(a, a)


def test_alignment_examples():
    r = Rect(1, 1, 3, 3)
    assert is_aligned(r, AlignmentPointSet.from_rects([r]))
    assert not is_aligned(Rect(1, 1, 3, 4), AlignmentPointSet((1, 3), (1, 3)))


@given(st.integers(0, 10**6))
def test_alignment_is_transitive(seed):
    rng = random.Random(seed)
    p1 = random_polygon(rng, rng.randint(1, 6))
    z1 = p1.alignment_set()
    # p2 uses only p1's coordinates, p3 only p2's
    x2 = sorted(rng.sample(z1.xs, 2)) if len(z1.xs) > 1 else None
    y2 = sorted(rng.sample(z1.ys, 2))
    p2 = Rect(x2[0], y2[0], x2[1], y2[1])
    p3 = Rect(p2.x1, p2.y1, p2.x2, p2.y2)
    assert is_aligned(p2, z1)
    assert is_aligned(p3, AlignmentPointSet.from_rects([p2]))
    assert is_aligned(p3, z1)


def test_rectangle_tiles_to_itself():
    p = RectilinearPolygon([(0, 0), (3, 0), (3, 2), (0, 2)])
    assert tile_polygon(p) == [Rect(0, 0, 3, 2, True)]


def _assert_tiles_polygon(p, out):
    box = p.bbox().coords()
    assert check_tiling(out, lambda pt: polygon_has(p.corners, pt), box)
    z = p.alignment_set()
    assert all(is_aligned(r, z) for r in out)


def test_l_shape():
    p = RectilinearPolygon([(0, 0), (4, 0), (4, 2), (2, 2), (2, 4), (0, 4)])
    out = tile_polygon(p)
    assert len(out) == 2
    _assert_tiles_polygon(p, out)


def test_plus_shape():
    p = RectilinearPolygon(
        [(2, 0), (4, 0), (4, 2), (6, 2), (6, 4), (4, 4), (4, 6), (2, 6), (2, 4), (0, 4), (0, 2), (2, 2)]
    )
    out = tile_polygon(p)
    assert len(out) <= 9
    _assert_tiles_polygon(p, out)


def test_clockwise_input_is_normalised():
    p = RectilinearPolygon([(0, 0), (0, 2), (3, 2), (3, 0)])
    assert p.area == 6


def test_self_intersecting_boundary_rejected():
    with pytest.raises(ValueError):
        # figure-eight that crosses itself
        RectilinearPolygon([(0, 0), (4, 0), (4, 2), (1, 2), (1, 4), (3, 4), (3, 1), (0, 1)])


def test_complement_left_half():
    b = Rect(0, 0, 4, 4, True)
    p = RectilinearPolygon([(0, 0), (2, 0), (2, 4), (0, 4)])
    assert tile_complement(p, b) == [Rect(2, 0, 4, 4, True)]


def test_complement_interior_square():
    b = Rect(0, 0, 6, 6, True)
    p = RectilinearPolygon([(2, 2), (4, 2), (4, 4), (2, 4)])
    out = tile_complement(p, b)
    assert len(out) <= 6
    assert check_tiling(out, lambda pt: not polygon_has(p.corners, pt), b.coords())


def test_complement_of_box_is_empty():
    b = Rect(0, 0, 4, 4, True)
    assert tile_complement(RectilinearPolygon(b.corners()), b) == []


def test_complement_outside_box_rejected():
    with pytest.raises(ValueError):
        tile_complement(RectilinearPolygon([(0, 0), (5, 0), (5, 1), (0, 1)]), Rect(0, 0, 4, 4, True))


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**9), st.integers(1, 12))
def test_tile_polygon_properties(seed, size):
    p = random_polygon(random.Random(seed), size)
    out = tile_polygon(p)
    assert len(out) <= len(p) - 3
    _assert_tiles_polygon(p, out)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**9), st.integers(1, 12), st.integers(0, 3), st.integers(0, 3))
def test_tile_complement_properties(seed, size, pad_lo, pad_hi):
    p = random_polygon(random.Random(seed), size)
    bb = p.bbox()
    b = Rect(bb.x1 - pad_lo, bb.y1 - pad_hi, bb.x2 + pad_hi, bb.y2 + pad_lo, True)
    out = tile_complement(p, b)
    assert len(out) <= len(p) + 2
    assert check_tiling(out, lambda pt: not polygon_has(p.corners, pt), b.coords())
    z = AlignmentPointSet.from_points(list(p.corners) + list(b.corners()))
    assert all(is_aligned(r, z) for r in out)


def test_tile_cells_handles_a_ring():
    ring = {(i, j) for i in range(3) for j in range(3)} - {(1, 1)}
    out = tile_cells([0, 1, 2, 3], [0, 1, 2, 3], ring)
    assert check_tiling(out, lambda pt: not (2 < pt[0] < 4 and 2 < pt[1] < 4), (0, 0, 3, 3))
