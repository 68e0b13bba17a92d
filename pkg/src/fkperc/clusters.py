"""Cluster labeling and the macroscopic events built on it.

All detectors take either a configuration (``EdgeConfiguration`` or raw
bits in box edge order) or a ready :class:`ClusterLabeling`.  Volumes are
normalised by ``|V|``, which is ``n^2`` for the symmetric box ``B(n)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import _kernels
from .fk_core import box_bits
from .geometry import LatticeBox, admissible_sides

FACE_ORDER = (-1, 1, -2, 2)


@dataclass
class ClusterLabeling:
    """Open clusters of a configuration inside a box, with per-cluster statistics.

    Labels are canonical: cluster ``c`` is the ``c``-th distinct cluster met
    when scanning vertices in index order.
    """

    box: LatticeBox
    labels: np.ndarray
    volume: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    touches_boundary: np.ndarray
    bits: np.ndarray = field(repr=False)

    @property
    def n_clusters(self) -> int:
        return len(self.volume)

    @cached_property
    def spread(self) -> np.ndarray:
        return self.hi - self.lo

    @cached_property
    def diameter(self) -> np.ndarray:
        return self.spread.max(axis=1)

    @cached_property
    def faces(self) -> np.ndarray:
        """``(n_clusters, 4)`` contact flags for faces -1, +1, -2, +2."""
        b = self.box
        return np.stack([self.lo[:, 0] == b.lo[0] + 1, self.hi[:, 0] == b.hi[0],
                         self.lo[:, 1] == b.lo[1] + 1, self.hi[:, 1] == b.hi[1]], axis=1)

    def members(self, label: int) -> set:
        return {tuple(map(int, x)) for x in self.box.coords[self.labels == label]}


def label_clusters(omega, V: LatticeBox) -> ClusterLabeling:
    if isinstance(omega, ClusterLabeling):
        return omega
    bits = box_bits(omega, V)
    e = V.edge_index
    labels, n = _kernels.label_open(V.n_vertices, e[:, 0], e[:, 1], bits,
                                    np.full(V.n_vertices, -1, dtype=np.int64), 0)
    vol, mn, mx, touch = _kernels.cluster_stats(labels, n, V.coords, V.boundary_mask)
    return ClusterLabeling(V, labels, vol, mn, mx, touch, bits)


def detect_crossing(labeling: ClusterLabeling, i: int) -> set[int]:
    """Clusters joining the faces ``-i`` and ``+i`` (``i`` in {1, 2})."""
    if i not in (1, 2):
        raise ValueError("crossing axis must be 1 or 2")
    f = labeling.faces
    hit = f[:, 2 * (i - 1)] & f[:, 2 * (i - 1) + 1]
    return set(np.flatnonzero(hit).tolist())


def crossing_clusters(labeling: ClusterLabeling) -> list[int]:
    """Clusters containing both a 1-crossing and a 2-crossing."""
    return np.flatnonzero(labeling.faces.all(axis=1)).tolist()


def four_face_clusters(labeling: ClusterLabeling) -> list[int]:
    """Clusters meeting all four faces.

    Inside a box a cluster meets both ``i``-faces exactly when it contains
    an ``i``-crossing path, so this agrees with :func:`crossing_clusters`.
    """
    f = labeling.faces
    return [c for c in range(labeling.n_clusters) if f[c, 0] and f[c, 1] and f[c, 2] and f[c, 3]]


@dataclass
class EventOutcome:
    name: str
    holds: bool
    witness: dict = field(default_factory=dict)

    def __bool__(self):
        return self.holds


def event_U(omega, V: LatticeBox) -> EventOutcome:
    """Exactly one crossing cluster."""
    lab = label_clusters(omega, V)
    cross = crossing_clusters(lab)
    w = {"n_crossing": len(cross)}
    if len(cross) == 1:
        w["cluster"] = cross[0]
        w["volume"] = int(lab.volume[cross[0]])
    return EventOutcome("U", len(cross) == 1, w)


def event_Rg(omega, V: LatticeBox, g_value: float) -> EventOutcome:
    """``U`` and every other cluster has diameter below ``g_value``.

    An open path lies in a single cluster and cannot exceed its diameter,
    so the path condition reduces to cluster diameters.
    """
    lab = label_clusters(omega, V)
    u = event_U(lab, V)
    if not u.holds:
        return EventOutcome("Rg", False, dict(u.witness, reason="U fails"))
    c = u.witness["cluster"]
    others = np.ones(lab.n_clusters, dtype=bool)
    others[c] = False
    bad = np.flatnonzero(others & (lab.diameter >= g_value))
    w = dict(u.witness, g=g_value)
    if len(bad):
        w["offender"] = int(bad[0])
        w["offender_diameter"] = int(lab.diameter[bad[0]])
    return EventOutcome("Rg", len(bad) == 0, w)


def _grid_views(lab: ClusterLabeling):
    w, h = lab.box.shape
    nh = (w - 1) * h
    bits = lab.bits
    return (bits[:nh].reshape(w - 1, h), bits[nh:].reshape(w, h - 1), lab.labels.reshape(w, h))


def event_Og(omega, V: LatticeBox, g_value: float) -> EventOutcome:
    """``R^g`` and the crossing cluster crosses every sub-box of class ``B_2(g_value)`` inside ``V``.

    Sub-boxes are scanned on every integer offset for every admissible side
    pair; their number is at most ``16 n^4``.  The first uncrossed sub-box
    ends the scan.
    """
    lab = label_clusters(omega, V)
    r = event_Rg(lab, V, g_value)
    if not r.holds:
        return EventOutcome("Og", False, dict(r.witness, reason="Rg fails"))
    sides = np.array(admissible_sides(g_value), dtype=np.int64)
    bh, bv, gl = _grid_views(lab)
    ok, a, b, s1, s2 = _kernels.all_subboxes_crossed(np.ascontiguousarray(bh), np.ascontiguousarray(bv),
                                                     np.ascontiguousarray(gl), r.witness["cluster"],
                                                     sides, sides)
    w = dict(r.witness)
    if not ok:
        corner = (V.lo[0] + 1 + int(a), V.lo[1] + 1 + int(b))
        w["uncrossed_subbox"] = LatticeBox.from_corner(corner, (int(s1), int(s2)))
    return EventOutcome("Og", bool(ok), w)


def event_V(omega, V: LatticeBox, delta: float, theta_ref: float) -> EventOutcome:
    """``U`` and the crossing cluster holds more than ``(theta_ref - delta) |V|`` vertices."""
    if not 0.0 <= theta_ref <= 1.0:
        raise ValueError("theta_ref must lie in [0, 1]")
    u = event_U(omega, V)
    if not u.holds:
        return EventOutcome("V", False, u.witness)
    ok = u.witness["volume"] > (theta_ref - delta) * V.n_vertices
    return EventOutcome("V", bool(ok), dict(u.witness, threshold=(theta_ref - delta) * V.n_vertices))


def boundary_cluster_volume(labeling: ClusterLabeling) -> int:
    """Total volume of the clusters meeting the inner boundary."""
    return int(labeling.volume[labeling.touches_boundary].sum())


def maximal_cluster(labeling: ClusterLabeling) -> int:
    """Largest cluster; ties go to the smallest label."""
    return int(np.argmax(labeling.volume))


def intermediate_set(labeling: ClusterLabeling, l: float) -> tuple[list[int], int]:
    """Non-maximal clusters of diameter at least ``l`` and their total volume."""
    if l < 1:
        raise ValueError("l must be >= 1")
    m = maximal_cluster(labeling)
    sel = labeling.diameter >= l
    sel[m] = False
    idx = np.flatnonzero(sel)
    return idx.tolist(), int(labeling.volume[idx].sum())


def event_K(omega, V: LatticeBox, eps: float, l: float, theta_ref: float) -> EventOutcome:
    """Unique maximal cluster, crossing, with density within ``eps`` of ``theta_ref`` and
    negligible ``l``-intermediate volume."""
    lab = label_clusters(omega, V)
    n2 = V.n_vertices
    m = maximal_cluster(lab)
    vmax = int(lab.volume[m])
    ties = int((lab.volume == vmax).sum())
    _, inter = intermediate_set(lab, l)
    w = {"cluster": m, "volume": vmax, "ties": ties, "intermediate_volume": inter}
    ok = (ties == 1 and bool(lab.faces[m].all())
          and theta_ref - eps < vmax / n2 < theta_ref + eps
          and inter / n2 < eps)
    return EventOutcome("K", bool(ok), w)
