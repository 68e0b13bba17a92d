"""Exact finite-volume FK measures on small boxes.

Weights are ``prod p^w(e) (1-p)^(1-w(e)) * q^cl`` where ``cl`` counts
clusters with boundary vertices of the same partition class treated as
pre-connected.  Everything here is exact enumeration, meant as a
correctness anchor rather than a production path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np
from scipy.special import logsumexp

from . import _kernels
from .geometry import Edge, LatticeBox, Point

DEFAULT_CAP = 22


class EnumerationCapError(ValueError):
    """Raised when an exact computation would exceed the edge-count cap."""


@dataclass(frozen=True)
class Parameters:
    p: float
    q: float

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {self.p}")
        if not self.q >= 1.0:
            raise ValueError(f"q must be >= 1, got {self.q}")
        object.__setattr__(self, "p", float(self.p))
        object.__setattr__(self, "q", float(self.q))

    @property
    def p_isolated(self) -> float:
        """Probability that an edge is open when its endpoints are not otherwise joined."""
        p, q = self.p, self.q
        return p / (p + q * (1.0 - p)) if p > 0 else 0.0


@dataclass
class EdgeConfiguration:
    """Binary states on an ordered edge set."""

    edges: tuple[Edge, ...]
    bits: np.ndarray

    def __post_init__(self):
        self.edges = tuple(self.edges)
        self.bits = np.asarray(self.bits, dtype=np.uint8).copy()
        if self.bits.shape != (len(self.edges),):
            raise ValueError(f"{len(self.edges)} edges but bits of shape {self.bits.shape}")
        if self.bits.size and self.bits.max() > 1:
            raise ValueError("edge states must be 0 or 1")

    @classmethod
    def on_box(cls, box: LatticeBox, bits=None) -> "EdgeConfiguration":
        if bits is None:
            bits = np.zeros(box.n_edges, dtype=np.uint8)
        return cls(box.edges, bits)

    @classmethod
    def from_mapping(cls, states: dict[Edge, int]) -> "EdgeConfiguration":
        edges = tuple(sorted(states))
        return cls(edges, np.array([states[e] for e in edges], dtype=np.uint8))

    def as_dict(self) -> dict[Edge, int]:
        return {e: int(b) for e, b in zip(self.edges, self.bits)}

    def __getitem__(self, e: Edge) -> int:
        return int(self.bits[self.edges.index(e)])

    def restrict(self, edges: Iterable[Edge]) -> "EdgeConfiguration":
        d = self.as_dict()
        edges = tuple(edges)
        return EdgeConfiguration(edges, np.array([d[e] for e in edges], dtype=np.uint8))

    def concat(self, other: "EdgeConfiguration") -> "EdgeConfiguration":
        """Union of two configurations on disjoint supports."""
        if set(self.edges) & set(other.edges):
            raise ValueError("supports overlap")
        return EdgeConfiguration(self.edges + other.edges, np.concatenate([self.bits, other.bits]))

    def n_open(self) -> int:
        return int(self.bits.sum())

    def open_edges(self) -> set[Edge]:
        return {e for e, b in zip(self.edges, self.bits) if b}

    def complement(self) -> "EdgeConfiguration":
        return EdgeConfiguration(self.edges, 1 - self.bits)


def box_bits(omega, box: LatticeBox) -> np.ndarray:
    """Bits of ``omega`` in the box's canonical edge order.

    Accepts a raw array already in that order or an ``EdgeConfiguration``
    whose support is exactly the box edge set.
    """
    if isinstance(omega, EdgeConfiguration):
        if omega.edges == box.edges:
            return omega.bits
        if set(omega.edges) != set(box.edges):
            raise ValueError("configuration is not supported on the box edge set")
        lookup = box.edge_lookup
        out = np.empty(box.n_edges, dtype=np.uint8)
        for e, b in zip(omega.edges, omega.bits):
            out[lookup[e]] = b
        return out
    bits = np.asarray(omega, dtype=np.uint8)
    if bits.shape != (box.n_edges,):
        raise ValueError(f"expected {box.n_edges} edge states, got shape {bits.shape}")
    return bits


class BoundaryPartition:
    """Partition of a box's inner boundary into wiring classes."""

    def __init__(self, box: LatticeBox, classes: Iterable[Iterable[Point]]):
        self.box = box
        classes = [frozenset(tuple(x) for x in c) for c in classes]
        boundary = {tuple(map(int, x)) for x in box.coords[box.boundary_mask]}
        seen: set[Point] = set()
        for c in classes:
            if not c:
                raise ValueError("partition classes must be nonempty")
            if c & seen:
                raise ValueError("partition classes overlap")
            if not c <= boundary:
                raise ValueError(f"vertices {sorted(c - boundary)} are not on the inner boundary")
            seen |= c
        if seen != boundary:
            raise ValueError(f"boundary vertices {sorted(boundary - seen)[:5]} are not covered")
        self.classes = tuple(sorted(classes, key=min))

    @classmethod
    def free(cls, box: LatticeBox) -> "BoundaryPartition":
        return cls(box, [[tuple(map(int, x))] for x in box.coords[box.boundary_mask]])

    @classmethod
    def wired(cls, box: LatticeBox) -> "BoundaryPartition":
        return cls(box, [[tuple(map(int, x)) for x in box.coords[box.boundary_mask]]])

    @classmethod
    def named(cls, box: LatticeBox, name: str) -> "BoundaryPartition":
        if name == "free":
            return cls.free(box)
        if name == "wired":
            return cls.wired(box)
        raise ValueError(f"unknown boundary condition {name!r}")

    def __eq__(self, other):
        return (isinstance(other, BoundaryPartition) and self.box == other.box
                and set(self.classes) == set(other.classes))

    def __repr__(self):
        return f"BoundaryPartition({self.box}, {len(self.classes)} classes)"

    def class_array(self) -> tuple[np.ndarray, int]:
        """Per-vertex class id for classes of size >= 2 (others -1), and their count."""
        cls = np.full(self.box.n_vertices, -1, dtype=np.int64)
        n = 0
        for c in self.classes:
            if len(c) < 2:
                continue
            for x in c:
                cls[self.box.index(x)] = n
            n += 1
        return cls, n

    def wired_pair(self, x: Point, y: Point) -> bool:
        return any(x in c and y in c for c in self.classes)

    def dominates(self, other: "BoundaryPartition") -> bool:
        """``self >= other``: every ``other``-wired pair is ``self``-wired."""
        owner = {x: i for i, c in enumerate(self.classes) for x in c}
        return all(len({owner[x] for x in c}) == 1 for c in other.classes)

    # -- file format: one class per line, vertices as "x,y" separated by spaces

    def dumps(self) -> str:
        return "".join(" ".join(f"{x},{y}" for x, y in sorted(c)) + "\n" for c in self.classes)

    @classmethod
    def loads(cls, box: LatticeBox, text: str) -> "BoundaryPartition":
        classes = []
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line:
                continue
            cur = []
            for tok in line.split():
                try:
                    x, y = tok.split(",")
                    cur.append((int(x), int(y)))
                except ValueError:
                    raise ValueError(f"line {lineno}: bad vertex token {tok!r}") from None
            classes.append(cur)
        return cls(box, classes)

    @classmethod
    def read(cls, box: LatticeBox, path) -> "BoundaryPartition":
        return cls.loads(box, Path(path).read_text())

    def write(self, path) -> None:
        Path(path).write_text(self.dumps())


def _as_partition(box: LatticeBox, pi) -> BoundaryPartition:
    if isinstance(pi, BoundaryPartition):
        if pi.box != box:
            raise ValueError("partition belongs to a different box")
        return pi
    return BoundaryPartition.named(box, pi)


def cluster_count(eta, V: LatticeBox, pi) -> int:
    """Number of clusters when ``pi``-wired boundary vertices count as joined."""
    pi = _as_partition(V, pi)
    bits = box_bits(eta, V)
    cls, n_cls = pi.class_array()
    e = V.edge_index
    _, n = _kernels.label_open(V.n_vertices, e[:, 0], e[:, 1], bits, cls, n_cls)
    return int(n)


def _log_weight(n_open, n_closed, cl, params: Parameters):
    p, q = params.p, params.q
    with np.errstate(divide="ignore"):
        lp = math.log(p) if p > 0 else -math.inf
        lq = math.log(1 - p) if p < 1 else -math.inf
    out = cl * math.log(q)
    out = out + np.where(n_open > 0, n_open * lp, 0.0) + np.where(n_closed > 0, n_closed * lq, 0.0)
    return out


def atom_weight(eta, V: LatticeBox, pi, params: Parameters) -> float:
    """Unnormalised weight of a single configuration."""
    bits = box_bits(eta, V)
    o = int(bits.sum())
    cl = cluster_count(bits, V, pi)
    return float(math.exp(_log_weight(np.array(o), np.array(V.n_edges - o), np.array(cl), params)))


@dataclass
class ExactDistribution:
    """All atoms of a finite-volume FK measure.

    Atom ``i`` is the configuration whose bit ``k`` (edge ``k`` of the box)
    equals bit ``k`` of ``masks[i]``.
    """

    box: LatticeBox
    partition: BoundaryPartition
    params: Parameters
    masks: np.ndarray
    probs: np.ndarray
    log_normalizer: float
    cluster_counts: np.ndarray = field(repr=False)

    @property
    def normalizer(self) -> float:
        return math.exp(self.log_normalizer)

    @property
    def n_edges(self) -> int:
        return self.box.n_edges

    def bits_matrix(self, rows=None) -> np.ndarray:
        m = self.masks if rows is None else self.masks[rows]
        return ((m[:, None] >> np.arange(self.n_edges)) & 1).astype(np.uint8)

    def atom(self, i: int) -> EdgeConfiguration:
        return EdgeConfiguration(self.box.edges, self.bits_matrix([i])[0])

    @property
    def atoms(self) -> Iterator[tuple[EdgeConfiguration, float]]:
        for i in range(len(self.masks)):
            yield self.atom(i), float(self.probs[i])

    def probability(self, event: Callable[[EdgeConfiguration], bool]) -> float:
        total = 0.0
        for i in range(len(self.masks)):
            if event(self.atom(i)):
                total += self.probs[i]
        return float(total)

    def probability_bits(self, event: Callable[[np.ndarray], np.ndarray]) -> float:
        """Like :meth:`probability` for a predicate vectorised over a bits matrix."""
        hit = np.asarray(event(self.bits_matrix()), dtype=bool)
        return float(self.probs[hit].sum())

    def edge_marginals(self) -> np.ndarray:
        return self.probs @ self.bits_matrix()


def _check_cap(n_edges: int, cap: int) -> None:
    if n_edges > cap:
        raise EnumerationCapError(f"{n_edges} edges exceed the enumeration cap of {cap}")


@lru_cache(maxsize=4)
def _atom_table(V: LatticeBox, classes) -> tuple[np.ndarray, np.ndarray]:
    """Cluster and open-edge counts of every atom; independent of ``p`` and ``q``."""
    cls, n_cls = BoundaryPartition(V, classes).class_array()
    e = V.edge_index
    cl, n_open = _kernels.enumerate_atoms(V.n_vertices, e[:, 0], e[:, 1], cls, n_cls)
    cl.flags.writeable = False
    n_open.flags.writeable = False
    return cl, n_open


def exact_distribution(V: LatticeBox, pi, params: Parameters, cap: int = DEFAULT_CAP) -> ExactDistribution:
    """Full atom table of the FK measure on ``V`` with boundary partition ``pi``."""
    pi = _as_partition(V, pi)
    _check_cap(V.n_edges, cap)
    if not 0.0 < params.p < 1.0:
        raise ValueError("exact enumeration needs 0 < p < 1 so that every atom is charged")
    cl, n_open = _atom_table(V, pi.classes)
    logw = _log_weight(n_open, V.n_edges - n_open, cl, params)
    logz = float(logsumexp(logw))
    probs = np.exp(logw - logz)
    masks = np.arange(1 << V.n_edges, dtype=np.int64)
    return ExactDistribution(V, pi, params, masks, probs, logz, cl)


def exact_event_probability(event: Callable[[EdgeConfiguration], bool], V: LatticeBox, pi,
                            params: Parameters, cap: int = DEFAULT_CAP) -> float:
    return exact_distribution(V, pi, params, cap).probability(event)


def induced_partition(V: LatticeBox, U: LatticeBox, omega: EdgeConfiguration, pi) -> BoundaryPartition:
    """Boundary partition of ``U`` induced by the configuration outside ``U`` and by ``pi``.

    Two vertices of the inner boundary of ``U`` share a class when open
    edges of ``E(V) minus E(U)`` join them, possibly through ``pi``-wired
    boundary vertices of ``V``.
    """
    if not V.contains_box(U):
        raise ValueError(f"{U} is not contained in {V}")
    pi = _as_partition(V, pi)
    inside = V.subbox_edge_mask(U)
    outside_edges = [e for e, m in zip(V.edges, inside) if not m]
    if set(omega.edges) != set(outside_edges):
        raise ValueError("omega must be supported exactly on E(V) minus E(U)")
    bits = np.zeros(V.n_edges, dtype=np.uint8)
    lookup = V.edge_lookup
    for e, b in zip(omega.edges, omega.bits):
        bits[lookup[e]] = b
    cls, n_cls = pi.class_array()
    e = V.edge_index
    labels, _ = _kernels.label_open(V.n_vertices, e[:, 0], e[:, 1], bits, cls, n_cls)
    groups: dict[int, list[Point]] = {}
    for x in U.coords[U.boundary_mask]:
        x = tuple(map(int, x))
        groups.setdefault(int(labels[V.index(x)]), []).append(x)
    return BoundaryPartition(U, groups.values())


def single_edge_conditional(e: Edge, omega, V: LatticeBox, pi, params: Parameters) -> float:
    """Probability that ``e`` is open given the states of all other edges of ``V``.

    ``omega`` may be a full box configuration (the state of ``e`` is
    ignored) or one supported on ``E(V)`` without ``e``.
    """
    pi = _as_partition(V, pi)
    k = V.edge_lookup.get(e)
    if k is None:
        raise KeyError(f"{e} is not an edge of {V}")
    if isinstance(omega, EdgeConfiguration) and len(omega.edges) == V.n_edges - 1:
        omega = omega.concat(EdgeConfiguration((e,), [0]))
    bits = box_bits(omega, V).copy()
    bits[k] = 0
    cls, n_cls = pi.class_array()
    ei = V.edge_index
    labels, _ = _kernels.label_open(V.n_vertices, ei[:, 0], ei[:, 1], bits, cls, n_cls)
    if labels[ei[k, 0]] == labels[ei[k, 1]]:
        return params.p
    return params.p_isolated


def exact_marginal(V: LatticeBox, pi, params: Parameters, edge_ids, cap: int = DEFAULT_CAP) -> np.ndarray:
    """Exact law of the edges ``edge_ids`` as a probability vector over their bit masks.

    Edges whose endpoints lie in one wiring class never change the cluster
    count; they are independent Bernoulli(p) and are summed out analytically,
    so only the remaining edges count against ``cap``.
    """
    pi = _as_partition(V, pi)
    if not 0.0 < params.p < 1.0:
        raise ValueError("exact enumeration needs 0 < p < 1")
    edge_ids = np.asarray(edge_ids, dtype=np.int64)
    cls, n_cls = pi.class_array()
    e = V.edge_index
    internal = (cls[e[:, 0]] >= 0) & (cls[e[:, 0]] == cls[e[:, 1]])
    live = np.flatnonzero(~internal)
    _check_cap(len(live), cap)
    cl, n_open = _kernels.enumerate_atoms(V.n_vertices, e[live, 0], e[live, 1], cls, n_cls)
    logw = _log_weight(n_open, len(live) - n_open, cl, params)
    probs = np.exp(logw - logsumexp(logw))
    masks = np.arange(1 << len(live), dtype=np.int64)
    bits_live = (masks[:, None] >> np.arange(len(live))) & 1
    pos = {int(k): j for j, k in enumerate(live)}
    out = np.zeros(1 << len(edge_ids))
    target = np.zeros(len(masks), dtype=np.int64)
    dead = []
    for j, k in enumerate(edge_ids):
        if int(k) in pos:
            target |= bits_live[:, pos[int(k)]] << j
        else:
            dead.append(j)
    np.add.at(out, target, probs)
    # independent factors of the class-internal edges among the targets
    for j in dead:
        idx = np.arange(len(out))
        on = (idx >> j) & 1
        src = out[idx & ~(1 << j)]
        out = np.where(on == 1, src * params.p, src * (1 - params.p))
    return out
