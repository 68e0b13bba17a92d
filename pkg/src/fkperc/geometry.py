"""Integer-lattice geometry: boxes, faces, boundaries, edge sets and dual boxes.

Boxes are half-open integer rectangles ``prod (lo_i, hi_i]``.  Dual vertices
live on ``Z^2 + (1/2, 1/2)`` and are stored as the integer point ``u`` that
stands for ``u + (1/2, 1/2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable

import numpy as np

Point = tuple[int, int]


class EmptyBoxError(ValueError):
    """Raised when a box request would not contain a usable vertex set."""


@dataclass(frozen=True, order=True)
class Edge:
    """Nearest-neighbour edge with canonically ordered endpoints (``a < b``)."""

    a: Point
    b: Point

    def __post_init__(self):
        a, b = tuple(self.a), tuple(self.b)
        if abs(a[0] - b[0]) + abs(a[1] - b[1]) != 1:
            raise ValueError(f"endpoints {a} and {b} are not nearest neighbours")
        if b < a:
            a, b = b, a
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def axis(self) -> int:
        """1 for a horizontal edge (endpoints differ in x1), 2 for vertical."""
        return 1 if self.a[0] != self.b[0] else 2


@dataclass(frozen=True)
class LatticeBox:
    """Vertex set ``prod_i (lo_i, hi_i]`` of the square lattice."""

    lo: Point
    hi: Point

    def __post_init__(self):
        lo = (int(self.lo[0]), int(self.lo[1]))
        hi = (int(self.hi[0]), int(self.hi[1]))
        if hi[0] <= lo[0] or hi[1] <= lo[1]:
            raise EmptyBoxError(f"box with lo={lo}, hi={hi} has no vertices")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def from_corner(cls, corner: Point, shape: tuple[int, int]) -> "LatticeBox":
        """Box whose smallest vertex is ``corner`` and with ``shape`` vertices per axis."""
        return cls((corner[0] - 1, corner[1] - 1),
                   (corner[0] + shape[0] - 1, corner[1] + shape[1] - 1))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.hi[0] - self.lo[0], self.hi[1] - self.lo[1])

    @property
    def n_vertices(self) -> int:
        return self.shape[0] * self.shape[1]

    @property
    def n_edges(self) -> int:
        w, h = self.shape
        return (w - 1) * h + w * (h - 1)

    def translate(self, v: Point) -> "LatticeBox":
        return LatticeBox((self.lo[0] + v[0], self.lo[1] + v[1]),
                          (self.hi[0] + v[0], self.hi[1] + v[1]))

    def contains(self, x: Point) -> bool:
        return self.lo[0] < x[0] <= self.hi[0] and self.lo[1] < x[1] <= self.hi[1]

    def contains_box(self, other: "LatticeBox") -> bool:
        return (self.lo[0] <= other.lo[0] and self.lo[1] <= other.lo[1]
                and other.hi[0] <= self.hi[0] and other.hi[1] <= self.hi[1])

    def intersect(self, other: "LatticeBox") -> "LatticeBox | None":
        lo = (max(self.lo[0], other.lo[0]), max(self.lo[1], other.lo[1]))
        hi = (min(self.hi[0], other.hi[0]), min(self.hi[1], other.hi[1]))
        if hi[0] <= lo[0] or hi[1] <= lo[1]:
            return None
        return LatticeBox(lo, hi)

    # -- indexing -----------------------------------------------------------
    # Vertex (x1, x2) has index (x1 - lo1 - 1) * w2 + (x2 - lo2 - 1).

    def index(self, x: Point) -> int:
        if not self.contains(x):
            raise KeyError(f"{x} is not a vertex of {self}")
        return (x[0] - self.lo[0] - 1) * self.shape[1] + (x[1] - self.lo[1] - 1)

    def point(self, idx: int) -> Point:
        w2 = self.shape[1]
        return (self.lo[0] + 1 + idx // w2, self.lo[1] + 1 + idx % w2)

    @cached_property
    def coords(self) -> np.ndarray:
        """``(n_vertices, 2)`` integer coordinates in index order."""
        xs = np.arange(self.lo[0] + 1, self.hi[0] + 1)
        ys = np.arange(self.lo[1] + 1, self.hi[1] + 1)
        gx, gy = np.meshgrid(xs, ys, indexing="ij")
        return np.stack([gx.ravel(), gy.ravel()], axis=1).astype(np.int64)

    def vertices(self) -> list[Point]:
        return [tuple(map(int, c)) for c in self.coords]

    @cached_property
    def edge_index(self) -> np.ndarray:
        """``(n_edges, 2)`` vertex-index endpoints; horizontal edges first."""
        w, h = self.shape
        idx = np.arange(w * h).reshape(w, h)
        horiz = np.stack([idx[:-1, :].ravel(), idx[1:, :].ravel()], axis=1)
        vert = np.stack([idx[:, :-1].ravel(), idx[:, 1:].ravel()], axis=1)
        out = np.concatenate([horiz, vert]).astype(np.int64)
        return out.reshape(-1, 2)

    @cached_property
    def edge_axis(self) -> np.ndarray:
        w, h = self.shape
        return np.concatenate([np.full((w - 1) * h, 1), np.full(w * (h - 1), 2)]).astype(np.int64)

    @cached_property
    def edges(self) -> tuple[Edge, ...]:
        c = self.coords
        return tuple(Edge(tuple(map(int, c[u])), tuple(map(int, c[v])))
                     for u, v in self.edge_index)

    @cached_property
    def edge_lookup(self) -> dict[Edge, int]:
        return {e: k for k, e in enumerate(self.edges)}

    @cached_property
    def boundary_mask(self) -> np.ndarray:
        """Boolean mask of the inner vertex boundary."""
        c = self.coords
        return ((c[:, 0] == self.lo[0] + 1) | (c[:, 0] == self.hi[0])
                | (c[:, 1] == self.lo[1] + 1) | (c[:, 1] == self.hi[1]))

    def face_mask(self, i: int) -> np.ndarray:
        _check_axis(i)
        c = self.coords[:, abs(i) - 1]
        target = self.hi[abs(i) - 1] if i > 0 else self.lo[abs(i) - 1] + 1
        return c == target

    def subbox_edge_mask(self, sub: "LatticeBox") -> np.ndarray:
        """Mask of this box's edges whose endpoints both lie in ``sub``."""
        c = self.coords
        inside = ((c[:, 0] > sub.lo[0]) & (c[:, 0] <= sub.hi[0])
                  & (c[:, 1] > sub.lo[1]) & (c[:, 1] <= sub.hi[1]))
        e = self.edge_index
        return inside[e[:, 0]] & inside[e[:, 1]]

    def subbox_vertex_mask(self, sub: "LatticeBox") -> np.ndarray:
        c = self.coords
        return ((c[:, 0] > sub.lo[0]) & (c[:, 0] <= sub.hi[0])
                & (c[:, 1] > sub.lo[1]) & (c[:, 1] <= sub.hi[1]))


def _check_axis(i: int) -> None:
    if i not in (1, -1, 2, -2):
        raise ValueError(f"face index must be one of +-1, +-2, got {i!r}")


def box_from_radii(r) -> LatticeBox:
    """Centered box ``Z^2 cap prod (-r_i/2, r_i/2]``.

    Radii below 1 are refused: they only ever yield the single origin and
    are never a meaningful scale.
    """
    r = (r, r) if np.isscalar(r) else tuple(r)
    if len(r) != 2:
        raise ValueError("radii must be a pair")
    if any(ri <= 0 for ri in r):
        raise ValueError(f"radii must be positive, got {r}")
    if any(ri < 1 for ri in r):
        raise EmptyBoxError(f"radii {r} are below 1 on some axis")
    lo = tuple(math.floor(-ri / 2) for ri in r)
    hi = tuple(math.floor(ri / 2) for ri in r)
    return LatticeBox(lo, hi)


def symmetric_box(n: int) -> LatticeBox:
    return box_from_radii((n, n))


def faces(b: LatticeBox, i: int) -> set[Point]:
    """The ``i``-th face: vertices whose ``|i|`` coordinate is maximal (i>0) or minimal (i<0)."""
    m = b.face_mask(i)
    return {tuple(map(int, x)) for x in b.coords[m]}


def _neighbours(x: Point):
    yield (x[0] + 1, x[1])
    yield (x[0] - 1, x[1])
    yield (x[0], x[1] + 1)
    yield (x[0], x[1] - 1)


def boundaries(A: Iterable[Point]) -> tuple[set[Point], set[Edge]]:
    """Inner vertex boundary and edge boundary of a finite vertex set."""
    A = {tuple(x) for x in A}
    inner: set[Point] = set()
    edge: set[Edge] = set()
    for x in A:
        for y in _neighbours(x):
            if y not in A:
                inner.add(x)
                edge.add(Edge(x, y))
    return inner, edge


def diameter(A: Iterable[Point]) -> int:
    """``max(diam_1, diam_2)`` with ``diam_i`` the spread of coordinate ``i``."""
    pts = np.asarray([tuple(x) for x in A])
    if pts.size == 0:
        raise ValueError("diameter of an empty set is undefined")
    spread = pts.max(axis=0) - pts.min(axis=0)
    return int(spread.max())


# -- box classes --------------------------------------------------------------

def in_H2(r, t: float) -> bool:
    """Radii pair in ``[t, 2t]^2``."""
    if t <= 0:
        raise ValueError("t must be positive")
    return all(t <= ri <= 2 * t for ri in r)


def side_admissible(s: int, t: float) -> bool:
    """Whether some radius ``r in [t, 2t]`` gives a centered box with ``s`` vertices per axis.

    An even count ``2k`` needs ``r = 2k`` exactly; an odd count ``2k+1`` is
    produced by every ``r`` in the open interval ``(2k, 2k+2)``.
    """
    if s < 1:
        return False
    if s % 2 == 0:
        return t <= s <= 2 * t
    return s - 1 < 2 * t and s + 1 > t


def admissible_sides(t: float) -> list[int]:
    return [s for s in range(1, int(math.floor(2 * t)) + 2) if side_admissible(s, t)]


def in_B2(b: LatticeBox, t: float) -> bool:
    """Box congruent to some ``B(r)`` with ``r in H_2(t)``."""
    if t <= 0:
        raise ValueError("t must be positive")
    return all(side_admissible(s, t) for s in b.shape)


def class_membership(b, t: float) -> bool:
    """``H_2(t)`` membership for a radii pair, ``B_2(t)`` membership for a box."""
    if isinstance(b, LatticeBox):
        return in_B2(b, t)
    return in_H2(b, t)


# -- duality --------------------------------------------------------------------

@dataclass(frozen=True)
class DualBox:
    """Box of ``Z^2 + (1/2, 1/2)``; ``box`` holds the integer representatives."""

    box: LatticeBox

    @property
    def shape(self) -> tuple[int, int]:
        return self.box.shape

    @property
    def n_vertices(self) -> int:
        return self.box.n_vertices

    def real_vertices(self) -> list[tuple[float, float]]:
        return [(x + 0.5, y + 0.5) for x, y in self.box.vertices()]

    @cached_property
    def perimeter_edge_mask(self) -> np.ndarray:
        """Edges lying along a face of the dual box, ``E(boundary)`` of the dual.

        An edge belongs to the dual boundary when both endpoints sit on the
        same face.  For boxes with every side at least 3 this is the same as
        "both endpoints on the inner boundary".
        """
        b = self.box
        c = b.coords
        e = b.edge_index
        out = np.zeros(len(e), dtype=bool)
        for i in (1, -1, 2, -2):
            m = b.face_mask(i)
            out |= m[e[:, 0]] & m[e[:, 1]]
        return out

    @cached_property
    def interior_edge_ids(self) -> np.ndarray:
        return np.flatnonzero(~self.perimeter_edge_mask)


def dual_box(b: LatticeBox) -> DualBox:
    """Smallest shifted box containing every vertex of ``b``."""
    return DualBox(LatticeBox((b.lo[0] - 1, b.lo[1] - 1), b.hi))


def crossing_dual_edge(e: Edge) -> Edge:
    """Dual edge (integer representatives) crossing the primal edge ``e``."""
    (x, y) = e.a
    if e.axis == 1:
        return Edge((x, y - 1), (x, y))
    return Edge((x - 1, y), (x, y))


def crossing_primal_edge(d: Edge) -> Edge:
    """Primal edge crossed by the dual edge with integer representatives ``d``."""
    (u, v) = d.a
    if d.axis == 2:
        return Edge((u, v + 1), (u + 1, v + 1))
    return Edge((u + 1, v), (u + 1, v + 1))


def dual_edge(e: Edge, b: LatticeBox) -> Edge:
    if e not in b.edge_lookup:
        raise KeyError(f"{e} is not an edge of {b}")
    return crossing_dual_edge(e)


def primal_edge(d: Edge, b: LatticeBox) -> Edge:
    e = crossing_primal_edge(d)
    if e not in b.edge_lookup:
        raise KeyError(f"dual edge {d} does not cross an edge of {b}")
    return e


_SUB_EDGE_CACHE: dict = {}


def sub_edge_ids(big: LatticeBox, sub: LatticeBox) -> np.ndarray:
    """Indices into ``big``'s edge list of ``sub``'s edges, in ``sub``'s own edge order."""
    key = (big, sub)
    hit = _SUB_EDGE_CACHE.get(key)
    if hit is not None:
        return hit
    if not big.contains_box(sub):
        raise ValueError(f"{sub} is not inside {big}")
    W, H = big.shape
    w, h = sub.shape
    i0 = sub.lo[0] - big.lo[0]
    j0 = sub.lo[1] - big.lo[1]
    ii, jj = np.meshgrid(np.arange(w - 1) + i0, np.arange(h) + j0, indexing="ij")
    horiz = (ii * H + jj).ravel()
    ii, jj = np.meshgrid(np.arange(w) + i0, np.arange(h - 1) + j0, indexing="ij")
    vert = ((W - 1) * H + ii * (H - 1) + jj).ravel()
    out = np.concatenate([horiz, vert]).astype(np.int64)
    if len(_SUB_EDGE_CACHE) > 4096:
        _SUB_EDGE_CACHE.clear()
    _SUB_EDGE_CACHE[key] = out
    return out
