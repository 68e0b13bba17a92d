"""N-block coarse graining of a large box.

Index ``k`` owns the nominal block ``N k + (-N/2, N/2]^2``.  Indices whose
nominal block fits inside the box form the rescaled box; boundary indices
also absorb the parts of neighbouring nominal blocks that stick out of it,
so the blocks tile the box exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from itertools import product

import numpy as np

from . import _kernels
from .clusters import EventOutcome, crossing_clusters, label_clusters
from .fk_core import BoundaryPartition, Parameters, box_bits
from .geometry import LatticeBox, box_from_radii, sub_edge_ids, symmetric_box
from .sampler import sample_bits, wilson_report

Index = tuple[int, int]
MIN_N = 24


class NotNLargeError(ValueError):
    pass


def nominal_block(k: Index, N: int) -> LatticeBox:
    """``N k + (-N/2, N/2]^2`` as an integer box."""
    lo = tuple((2 * N * ki - N) // 2 for ki in k)
    hi = tuple((2 * N * ki + N) // 2 for ki in k)
    return LatticeBox(lo, hi)


def _neighbours(k: Index):
    return [(k[0] + 1, k[1]), (k[0] - 1, k[1]), (k[0], k[1] + 1), (k[0], k[1] - 1)]


def _diagonals(k: Index):
    return [(k[0] + a, k[1] + b) for a in (-1, 1) for b in (-1, 1)]


@dataclass
class BlockPartition:
    N: int
    lam: LatticeBox
    index_box: LatticeBox
    blocks: dict
    connectors: dict = field(default_factory=dict)

    @property
    def indices(self) -> list[Index]:
        return sorted(self.blocks)

    @cached_property
    def interior(self) -> set[Index]:
        ib = self.index_box
        return {k for k in self.blocks if ib.lo[0] + 1 < k[0] < ib.hi[0] and ib.lo[1] + 1 < k[1] < ib.hi[1]}

    @property
    def boundary(self) -> set[Index]:
        return set(self.blocks) - self.interior

    def neighbours(self, k: Index) -> list[Index]:
        return [l for l in _neighbours(k) if l in self.blocks]

    def edges(self) -> list[tuple[Index, Index]]:
        """Rescaled edges ``(l, k)`` with ``k = l + e_i``."""
        out = []
        for l in self.indices:
            for k in ((l[0] + 1, l[1]), (l[0], l[1] + 1)):
                if k in self.blocks:
                    out.append((l, k))
        return out

    def connector(self, k: Index, l: Index) -> LatticeBox:
        key = (k, l) if k < l else (l, k)
        return self.connectors[key]

    @cached_property
    def block_owner(self) -> np.ndarray:
        """Per vertex of ``lam``, the position of its block in :attr:`indices`."""
        owner = np.full(self.lam.n_vertices, -1, dtype=np.int64)
        for pos, k in enumerate(self.indices):
            owner[self.lam.subbox_vertex_mask(self.blocks[k])] = pos
        return owner


def build_partition(lam: LatticeBox, N: int, min_N: int = MIN_N) -> BlockPartition:
    """Partition an ``N``-large box into blocks with sides in ``[N, 2N]``.

    Boundary indices absorb every straddling nominal block adjacent to them.
    Corner pieces, reachable only diagonally, go to the diagonal index; if
    several indices could claim a piece the lexicographically smallest wins.
    ``min_N`` may be lowered for geometry-only checks at small scale.
    """
    N = int(N)
    if N < min_N:
        raise ValueError(f"N must be at least {min_N}, got {N}")
    if min(lam.shape) < 3 * N:
        raise NotNLargeError(f"{lam} has sides {lam.shape}, below 3N = {3 * N}")
    rng_axes = []
    for a in range(2):
        ks = [k for k in range(lam.lo[a] // N - 2, lam.hi[a] // N + 3)
              if (2 * N * k - N) // 2 >= lam.lo[a] and (2 * N * k + N) // 2 <= lam.hi[a]]
        rng_axes.append((min(ks), max(ks)))
    index_box = LatticeBox((rng_axes[0][0] - 1, rng_axes[1][0] - 1), (rng_axes[0][1], rng_axes[1][1]))
    indices = [tuple(map(int, k)) for k in index_box.coords]
    inside = set(indices)

    pieces = {k: [nominal_block(k, N)] for k in indices}
    candidates = set()
    for k in indices:
        for l in _neighbours(k) + _diagonals(k):
            if l not in inside:
                candidates.add(l)
    for l in sorted(candidates):
        piece = nominal_block(l, N).intersect(lam)
        if piece is None:
            continue
        claim = sorted(k for k in _neighbours(l) if k in inside) or sorted(k for k in _diagonals(l) if k in inside)
        pieces[claim[0]].append(piece)

    blocks = {}
    for k, ps in pieces.items():
        lo = (min(p.lo[0] for p in ps), min(p.lo[1] for p in ps))
        hi = (max(p.hi[0] for p in ps), max(p.hi[1] for p in ps))
        box = LatticeBox(lo, hi)
        if sum(p.n_vertices for p in ps) != box.n_vertices:
            raise AssertionError(f"block at {k} is not a rectangle")
        blocks[k] = box
    part = BlockPartition(N, lam, index_box, blocks)
    part.connectors = build_connectors(part)
    check_partition(part)
    return part


def build_connectors(partition: BlockPartition) -> dict:
    """Box ``B(floor(N/4))`` centred at the middle of the shared face, for each rescaled edge."""
    N = partition.N
    D0 = box_from_radii((N // 4, N // 4))
    out = {}
    for l, k in partition.edges():
        i = 0 if k[0] != l[0] else 1
        m = [N * l[0], N * l[1]]
        m[i] += N // 2
        out[(l, k)] = D0.translate(tuple(m))
    return out


def check_partition(partition: BlockPartition) -> None:
    """Disjoint cover of ``lam``, sides in ``[N, 2N]``, connectors inside their two blocks."""
    lam, N = partition.lam, partition.N
    count = np.zeros(lam.n_vertices, dtype=np.int64)
    for k, b in partition.blocks.items():
        if not lam.contains_box(b):
            raise AssertionError(f"block {k} leaves the box")
        if not all(N <= s <= 2 * N for s in b.shape):
            raise AssertionError(f"block {k} has sides {b.shape} outside [{N}, {2 * N}]")
        count[lam.subbox_vertex_mask(b)] += 1
    if not (count == 1).all():
        raise AssertionError("blocks do not partition the box")
    for (l, k), D in partition.connectors.items():
        m = lam.subbox_vertex_mask(D)
        own = lam.subbox_vertex_mask(partition.blocks[l]) | lam.subbox_vertex_mask(partition.blocks[k])
        if not lam.contains_box(D) or not own[m].all():
            raise AssertionError(f"connector {(l, k)} is not inside its two blocks")


# -- block events ----------------------------------------------------------------

def _sub_bits(bits: np.ndarray, lam: LatticeBox, sub: LatticeBox) -> np.ndarray:
    return bits[sub_edge_ids(lam, sub)]


def block_event_K(omega, partition: BlockPartition, edge: tuple[Index, Index]) -> bool:
    """Crossing of the connector box along the axis separating the two blocks."""
    k, l = edge
    bits = box_bits(omega, partition.lam)
    D = partition.connector(k, l)
    lab = label_clusters(_sub_bits(bits, partition.lam, D), D)
    i = 0 if k[0] != l[0] else 1
    f = lab.faces
    return bool((f[:, 2 * i] & f[:, 2 * i + 1]).any())


def block_event_R(omega, partition: BlockPartition, i: Index) -> EventOutcome:
    """Unique crossing cluster of the block, and every other cluster of diameter below ``sqrt(N)/10``."""
    B = partition.blocks[i]
    bits = box_bits(omega, partition.lam)
    lab = label_clusters(_sub_bits(bits, partition.lam, B), B)
    cross = crossing_clusters(lab)
    if len(cross) != 1:
        return EventOutcome("R", False, {"n_crossing": len(cross)})
    c = cross[0]
    thr = math.sqrt(partition.N) / 10
    others = lab.diameter >= thr
    others[c] = False
    w = {"cluster": c, "vertices": B.coords[lab.labels == c]}
    if others.any():
        w["offender_diameter"] = int(lab.diameter[np.flatnonzero(others)[0]])
    return EventOutcome("R", not others.any(), w)


@dataclass
class BlockProcessRealization:
    partition: BlockPartition
    X: dict
    R: dict
    K: dict

    def occupied(self) -> list[Index]:
        return [k for k, x in sorted(self.X.items()) if x]


def compute_X(omega, partition: BlockPartition, only=None) -> BlockProcessRealization:
    """Block indicators ``X_k = 1`` on ``R_k`` and every ``K_{k, j}``; ``only`` limits the indices."""
    bits = box_bits(omega, partition.lam)
    idx = partition.indices if only is None else list(only)
    R = {k: block_event_R(bits, partition, k) for k in idx}
    K = {}
    X = {}
    for k in idx:
        oks = []
        for j in partition.neighbours(k):
            key = (k, j) if k < j else (j, k)
            if key not in K:
                K[key] = block_event_K(bits, partition, key)
            oks.append(K[key])
        X[k] = int(R[k].holds and all(oks))
    return BlockProcessRealization(partition, X, R, K)


def window_E(partition: BlockPartition, i: Index) -> np.ndarray:
    """Vertex mask over ``lam``: blocks within distance 1 of ``i``, minus the connectors
    of the neighbours that do not touch ``i``."""
    lam = partition.lam
    mask = np.zeros(lam.n_vertices, dtype=bool)
    for j in [i] + partition.neighbours(i):
        mask |= lam.subbox_vertex_mask(partition.blocks[j])
    for j in partition.neighbours(i):
        for k in partition.neighbours(j):
            if k != i:
                mask &= ~lam.subbox_vertex_mask(partition.connector(j, k))
    return mask


def window_edge_mask(partition: BlockPartition, i: Index) -> np.ndarray:
    m = window_E(partition, i)
    e = partition.lam.edge_index
    return m[e[:, 0]] & m[e[:, 1]]


def _site_clusters(partition: BlockPartition, occupied: np.ndarray):
    """Clusters of occupied index sites; ``occupied`` is a mask in index-box vertex order."""
    ib = partition.index_box
    e = ib.edge_index
    bonds = (occupied[e[:, 0]] & occupied[e[:, 1]]).astype(np.uint8)
    lab = label_clusters(bonds, ib)
    return lab


def event_Z(realization: BlockProcessRealization, delta: float) -> EventOutcome:
    """Unique crossing cluster of occupied blocks holding at least ``(1 - delta)`` of all blocks."""
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    part = realization.partition
    ib = part.index_box
    occ = np.array([bool(realization.X[tuple(map(int, k))]) for k in ib.coords])
    lab = _site_clusters(part, occ)
    f = lab.faces.all(axis=1)
    cross = [c for c in np.flatnonzero(f) if occ[lab.labels == c].all()]
    w = {"n_crossing": len(cross)}
    if len(cross) != 1:
        return EventOutcome("Z", False, w)
    c = cross[0]
    members = [tuple(map(int, k)) for k in ib.coords[lab.labels == c]]
    w.update(cluster=members, size=len(members))
    return EventOutcome("Z", len(members) >= (1 - delta) * ib.n_vertices, w)


def block_cluster_bridge(omega, realization: BlockProcessRealization, block_cluster) -> tuple[bool, bool]:
    """For a cluster of occupied blocks: are the block crossing clusters all one microscopic
    cluster, and does that cluster cross the whole box?"""
    part = realization.partition
    lab = label_clusters(box_bits(omega, part.lam), part.lam)
    glabels = set()
    for k in block_cluster:
        pts = realization.R[k].witness["vertices"]
        glabels |= {int(lab.labels[part.lam.index(tuple(map(int, x)))]) for x in pts}
    connected = len(glabels) == 1
    crosses = connected and bool(lab.faces[next(iter(glabels))].all())
    return connected, crosses


def Y_statistic(omega, partition: BlockPartition, i: Index) -> int:
    """Total volume of the block's clusters with diameter at least ``sqrt(N)``."""
    B = partition.blocks[i]
    bits = box_bits(omega, partition.lam)
    lab = label_clusters(_sub_bits(bits, partition.lam, B), B)
    return int(lab.volume[lab.diameter >= math.sqrt(partition.N)].sum())


def interior_block_edge_boundary(partition: BlockPartition) -> np.ndarray:
    """Mask of ``lam`` edges in the edge boundary of some interior block."""
    lam = partition.lam
    e = lam.edge_index
    owner = partition.block_owner
    interior_pos = {pos for pos, k in enumerate(partition.indices) if k in partition.interior}
    a, b = owner[e[:, 0]], owner[e[:, 1]]
    inner = np.isin(a, list(interior_pos)) | np.isin(b, list(interior_pos))
    return inner & (a != b)


def regions_G_Q(partition: BlockPartition):
    """Per index, masks over ``lam`` of the frame ``G_i`` (distance to the block boundary
    at most ``sqrt(N)``) and the core ``Q_i``; also the union ``G``."""
    lam = partition.lam
    c = lam.coords
    s = math.sqrt(partition.N)
    out = {}
    G = np.zeros(lam.n_vertices, dtype=bool)
    for k, B in partition.blocks.items():
        inb = lam.subbox_vertex_mask(B)
        dist = np.minimum.reduce([c[:, 0] - (B.lo[0] + 1), B.hi[0] - c[:, 0],
                                  c[:, 1] - (B.lo[1] + 1), B.hi[1] - c[:, 1]])
        g = inb & (dist <= s)
        out[k] = (g, inb & ~g)
        G |= g
    return out, G


# -- domination probe -----------------------------------------------------------------

@dataclass
class DominationReport:
    N: int
    box: LatticeBox
    index: Index
    trials: int
    failures: int
    estimate: float
    ci_low: float
    ci_high: float
    bins: dict
    seed: int


def domination_probe(V: LatticeBox, pi, params: Parameters, N: int, replicas: int, seed: int = 0,
                     min_bin: int = 100, **sample_kw) -> DominationReport:
    """Frequency of ``X_i = 0`` at the central index, overall and binned by the states of
    the blocks at index distance greater than 1."""
    part = build_partition(V, N)
    centre = min(part.interior, key=lambda k: (abs(k[0]) + abs(k[1]), k)) if part.interior else None
    if centre is None:
        raise NotNLargeError("the box has no interior block index")
    far = [k for k in part.indices if abs(k[0] - centre[0]) + abs(k[1] - centre[1]) > 1]
    bins: dict = {}
    fails = 0
    for bits in sample_bits(V, pi, params, replicas, seed=seed, **sample_kw):
        x0 = compute_X(bits, part, only=[centre]).X[centre]
        far_state = tuple(compute_X(bits, part, only=far).X[k] for k in far) if far else ()
        b = bins.setdefault(far_state, [0, 0])
        b[0] += 1
        b[1] += int(x0 == 0)
        fails += int(x0 == 0)
    rep = wilson_report(fails, replicas, seed, params)
    bin_out = {}
    for state, (n, f) in sorted(bins.items()):
        bin_out[state] = {"samples": n, "failures": f,
                          "frequency": f / n, "conclusive": n >= min_bin}
    return DominationReport(N, V, centre, replicas, fails, rep.point, rep.ci_low, rep.ci_high, bin_out, seed)


def domination_box(N: int) -> LatticeBox:
    """Smallest symmetric box that is ``N``-large."""
    return symmetric_box(3 * N)
