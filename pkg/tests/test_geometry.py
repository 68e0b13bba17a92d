import numpy as np
import pytest
from hypothesis import given, strategies as st

from fkperc.geometry import (Edge, EmptyBoxError, LatticeBox, box_from_radii, boundaries, class_membership,
                             crossing_dual_edge, crossing_primal_edge, diameter, dual_box, dual_edge,
                             faces, in_B2, primal_edge, sub_edge_ids, symmetric_box)

small = st.integers(1, 7)


def box(w, h, corner=(0, 0)):
    return LatticeBox.from_corner(corner, (w, h))


def test_box_from_radii_examples():
    b = box_from_radii((4, 4))
    assert b.n_vertices == 16
    assert set(b.vertices()) == {(x, y) for x in range(-1, 3) for y in range(-1, 3)}
    assert box_from_radii((1, 1)).vertices() == [(0, 0)]
    assert box_from_radii((5, 3)).n_vertices == 15


def test_box_from_radii_errors():
    with pytest.raises(EmptyBoxError):
        box_from_radii((0.5, 3))
    with pytest.raises(ValueError):
        box_from_radii((-1, 3))


@given(st.floats(1, 40), st.floats(1, 40))
def test_radii_box_is_half_open_product(r1, r2):
    b = box_from_radii((r1, r2))
    for x in b.vertices():
        assert -r1 / 2 < x[0] <= r1 / 2 and -r2 / 2 < x[1] <= r2 / 2
    assert b.shape[0] == sum(1 for k in range(-50, 50) if -r1 / 2 < k <= r1 / 2)


def test_faces_examples():
    b = box(3, 3)
    assert faces(b, 1) == {(2, 0), (2, 1), (2, 2)}
    one = box(1, 1)
    assert all(faces(one, i) == {(0, 0)} for i in (1, -1, 2, -2))
    assert faces(box(4, 2), -2) == {(x, 0) for x in range(4)}
    with pytest.raises(ValueError):
        faces(b, 3)


def test_boundaries_examples():
    inner, _ = boundaries(box(3, 3).vertices())
    assert len(inner) == 8
    inner, edge = boundaries([(0, 0)])
    assert inner == {(0, 0)} and len(edge) == 4
    _, edge = boundaries(box(4, 4).vertices())
    assert len(edge) == 16


@given(small, small)
def test_faces_cover_inner_boundary(w, h):
    b = box(w, h)
    inner, _ = boundaries(b.vertices())
    assert set().union(*(faces(b, i) for i in (1, -1, 2, -2))) == inner
    if w >= 2:
        assert not faces(b, 1) & faces(b, -1)
    if h >= 2:
        assert not faces(b, 2) & faces(b, -2)


def test_dual_box_examples():
    d = dual_box(symmetric_box(4))
    reals = set(d.real_vertices())
    assert reals == {(x + 0.5, y + 0.5) for x in range(-2, 3) for y in range(-2, 3)}
    assert d.n_vertices == 25
    assert dual_box(box(1, 1)).shape == (2, 2)


def test_dual_edge_examples():
    e = Edge((0, 0), (1, 0))
    d = dual_edge(e, box(2, 2))
    assert {(x + 0.5, y + 0.5) for x, y in (d.a, d.b)} == {(0.5, -0.5), (0.5, 0.5)}
    assert crossing_primal_edge(crossing_dual_edge(e)) == e
    with pytest.raises(KeyError):
        dual_edge(Edge((5, 5), (6, 5)), box(2, 2))
    with pytest.raises(KeyError):
        primal_edge(Edge((-1, -1), (0, -1)), box(2, 2))


def test_b4_edge_counts_match():
    b = symmetric_box(4)
    d = dual_box(b)
    assert b.n_edges == 24 and len(d.interior_edge_ids) == 24


@pytest.mark.parametrize("w", range(1, 7))
@pytest.mark.parametrize("h", range(1, 7))
def test_dual_edge_bijection_exhaustive(w, h):
    b = box(w, h, (-2, 1))
    d = dual_box(b)
    image = [d.box.edge_lookup[dual_edge(e, b)] for e in b.edges]
    assert len(set(image)) == len(image)
    assert sorted(image) == sorted(d.interior_edge_ids.tolist())
    assert all(primal_edge(d.box.edges[j], b) == e for j, e in zip(image, b.edges))


def test_class_membership_examples():
    assert class_membership((10, 17), 10)
    assert not class_membership((10, 21), 10)
    b = box_from_radii((12, 15))
    assert class_membership(b, 10) and class_membership(b.translate((7, -3)), 10)
    assert not in_B2(box(25, 12), 10)


def test_diameter_examples():
    assert diameter([(0, 0)]) == 0
    assert diameter([(0, 0), (3, 1)]) == 3
    assert diameter(box(5, 3).vertices()) == 4
    with pytest.raises(ValueError):
        diameter([])


pts = st.lists(st.tuples(st.integers(-20, 20), st.integers(-20, 20)), min_size=1, max_size=15)


@given(pts, st.tuples(st.integers(-9, 9), st.integers(-9, 9)), pts)
def test_diameter_translation_invariant_and_monotone(A, v, extra):
    moved = [(x + v[0], y + v[1]) for x, y in A]
    assert diameter(moved) == diameter(A)
    assert diameter(A + extra) >= diameter(A)


@given(small, small, st.integers(0, 3), st.integers(0, 3), st.integers(1, 4), st.integers(1, 4))
def test_sub_edge_ids_match_lookup(W, H, a, b, w, h):
    big = box(a + w + W, b + h + H)
    sub = LatticeBox.from_corner((a, b), (w, h))
    ids = sub_edge_ids(big, sub)
    assert [big.edges[k] for k in ids] == list(sub.edges)


def test_edge_canonical_order():
    assert Edge((1, 0), (0, 0)) == Edge((0, 0), (1, 0))
    with pytest.raises(ValueError):
        Edge((0, 0), (1, 1))


def test_subbox_masks():
    b = box(5, 4)
    s = LatticeBox.from_corner((1, 1), (2, 2))
    assert b.subbox_vertex_mask(s).sum() == 4
    assert b.subbox_edge_mask(s).sum() == 4
    assert np.array_equal(np.flatnonzero(b.subbox_edge_mask(s)), np.sort(sub_edge_ids(b, s)))
