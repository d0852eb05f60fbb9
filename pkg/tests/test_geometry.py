import numpy as np
import pytest
from hypothesis import given, strategies as st

from epival import geometry as geo
from epival.errors import DimensionMismatch
from epival.geometry import LiftedPointSet, Polyhedron, lower_hull


def _cell_boxes(sub):
    return sorted((float(c.vertices.min()), float(c.vertices.max())) for c in sub.cells)


def test_lower_hull_two_points():
    sub = lower_hull(LiftedPointSet(1, np.array([[0.0], [1.0]]), np.array([0.0, 0.0])))
    assert _cell_boxes(sub) == [(0.0, 1.0)]
    assert sub.generators[0] == frozenset({0, 1})


def test_lower_hull_three_points_line():
    sub = lower_hull(LiftedPointSet(1, np.array([[0.0], [1.0], [2.0]]), np.array([0.0, -1.0, 0.0])))
    assert _cell_boxes(sub) == [(0.0, 1.0), (1.0, 2.0)]


def test_lower_hull_square_diagonal():
    pts = np.array([[0, 0], [1, 0], [0, 1], [1, 1]], float)
    sub = lower_hull(LiftedPointSet(2, pts, np.array([0, 0, 0, 1.0])))
    assert len(sub.cells) == 2
    # both triangles contain the diagonal from (1,0) to (0,1)
    for c in sub.cells:
        assert len(c.vertices) == 3
        assert c.contains([1, 0]) and c.contains([0, 1])
    assert sum(geo.volume(c) for c in sub.cells) == pytest.approx(1.0)


def test_lifted_points_keep_lowest_height():
    lp = LiftedPointSet(1, np.array([[0.0], [0.0], [1.0]]), np.array([3.0, -1.0, 0.0]))
    assert len(lp.points) == 2
    assert lp.heights.min() == -1.0


@given(st.integers(0, 10_000))
def test_lower_hull_tiles_convex_hull(seed):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-1, 1, (7, 2))
    h = rng.uniform(-1, 1, 7)
    sub = lower_hull(LiftedPointSet(2, pts, h))
    total = sum(geo.volume(c) for c in sub.cells)
    assert total == pytest.approx(geo.volume(Polyhedron.from_points(pts)), rel=1e-9)
    for i, P in enumerate(sub.cells):
        for Q in sub.cells[i + 1:]:
            assert geo.volume(geo.intersect(P, Q)) < 1e-9


@pytest.mark.parametrize("P, expected", [
    (Polyhedron.box([0, 0], [1, 1]), 1.0),
    (Polyhedron.from_points([[0, 0], [2, 0], [0, 2]]), 2.0),
    (Polyhedron.from_points([[0, 0], [1, 0]], 2), 0.0),
    (Polyhedron.box([-1], [2]), 3.0),
])
def test_volume(P, expected):
    assert geo.volume(P) == pytest.approx(expected)


def test_segment_measure():
    seg = Polyhedron.from_points([[0, 0], [1, 0]], 2)
    assert seg.affine_dim == 1
    assert geo.volume_k(seg, 1) == pytest.approx(1.0)


def test_intersections():
    tri = Polyhedron.from_points([[0, 0], [1, 0], [0, 1]])
    box = Polyhedron.box([-1, -1], [2, 2])
    assert geo.hausdorff_distance(geo.intersect(tri, box), tri) < 1e-12

    quadrant = Polyhedron.from_generators([[0, 0]], [[1, 0], [0, 1]])
    assert not quadrant.is_bounded
    Q = geo.intersect(quadrant, Polyhedron.box([-1, -1], [1, 1]))
    assert geo.hausdorff_distance(Q, Polyhedron.box([0, 0], [1, 1])) < 1e-12

    assert geo.intersect(Polyhedron.box([0, 0], [1, 1]), Polyhedron.box([2, 2], [3, 3])).is_empty


@pytest.mark.parametrize("t", [0.0, 0.25, 1.0, 3.5])
def test_hausdorff_translate(t, unit_square):
    assert geo.hausdorff_distance(unit_square, unit_square.translate([t, 0])) == pytest.approx(t)


def test_hausdorff_segments():
    assert geo.hausdorff_distance(Polyhedron.box([0], [1]), Polyhedron.box([0], [2])) == pytest.approx(1.0)


def test_minkowski():
    s = geo.minkowski_sum(Polyhedron.box([0], [1]), Polyhedron.box([0], [1]))
    assert geo.hausdorff_distance(s, Polyhedron.box([0], [2])) < 1e-12
    sq = Polyhedron.box([0, 0], [1, 1])
    moved = geo.minkowski_sum(sq, Polyhedron.point([2, 3]))
    assert geo.hausdorff_distance(moved, sq.translate([2, 3])) < 1e-12
    assert geo.volume(geo.minkowski_sum(sq, sq)) == pytest.approx(4.0)


def test_representations_agree(rng):
    P = Polyhedron.from_points(rng.normal(size=(9, 2)))
    A, b = P.halfspaces
    assert np.all(P.vertices @ A.T <= b + 1e-9)
    # every facet is supported by a vertex
    assert np.all(np.min(np.abs(P.vertices @ A.T - b), axis=0) < 1e-9)
    Q = Polyhedron.from_halfspaces(A, b)
    assert geo.hausdorff_distance(P, Q) < 1e-9


def test_roundtrip_dict(unit_square):
    Q = Polyhedron.from_dict(unit_square.to_dict())
    assert geo.hausdorff_distance(Q, unit_square) == 0.0


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        geo.intersect(Polyhedron.box([0], [1]), Polyhedron.box([0, 0], [1, 1]))


def test_convex_union():
    a, b = Polyhedron.box([0, 0], [1, 1]), Polyhedron.box([0.5, 0], [1.5, 1])
    U = geo.convex_union(a, b)
    assert geo.volume(U) == pytest.approx(1.5)
    assert geo.convex_union(a, Polyhedron.box([2, 2], [3, 3])) is None
