"""Single-edge heat-bath sampling of finite-volume FK measures.

Each update redraws one edge from its exact conditional law: ``p`` when
its endpoints are already joined (by other open edges or by boundary
wiring), ``p / (p + q (1 - p))`` otherwise.  Replica ``r`` of a run with
seed ``s`` draws from a Philox stream keyed by ``s ^ r``, so results do not
depend on how replicas are scheduled.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator

import numpy as np
from scipy.stats import binomtest

from . import _kernels
from .fk_core import BoundaryPartition, EdgeConfiguration, Parameters, _as_partition
from .geometry import Edge, LatticeBox

UNIFORM_CHUNK = 1 << 20


def replica_rng(seed: int, replica: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(int(seed) ^ int(replica)))


@dataclass(frozen=True)
class WiringGraph:
    """CSR adjacency of box vertices plus one virtual node per wiring class."""

    ptr: np.ndarray
    nbr: np.ndarray
    edge: np.ndarray
    n_nodes: int

    @classmethod
    def build(cls, box: LatticeBox, pi: BoundaryPartition) -> "WiringGraph":
        nv = box.n_vertices
        cl, n_cls = pi.class_array()
        e = box.edge_index
        src = [e[:, 0], e[:, 1]]
        dst = [e[:, 1], e[:, 0]]
        eid = [np.arange(len(e)), np.arange(len(e))]
        wired = np.flatnonzero(cl >= 0)
        src += [wired, nv + cl[wired]]
        dst += [nv + cl[wired], wired]
        eid += [np.full(len(wired), -1), np.full(len(wired), -1)]
        src = np.concatenate(src).astype(np.int64)
        dst = np.concatenate(dst).astype(np.int64)
        eid = np.concatenate(eid).astype(np.int64)
        order = np.argsort(src, kind="stable")
        n_nodes = nv + n_cls
        ptr = np.zeros(n_nodes + 1, dtype=np.int64)
        np.add.at(ptr, src + 1, 1)
        return cls(np.cumsum(ptr), dst[order], eid[order], n_nodes)


@dataclass
class ChainState:
    """Heat-bath chain on one box.

    ``connectivity`` is the static wiring graph; open-edge connectivity is
    queried on demand by bounded two-sided search, so it is consistent with
    ``bits`` at all times.
    """

    box: LatticeBox
    partition: BoundaryPartition
    params: Parameters
    bits: np.ndarray
    connectivity: WiringGraph
    rng: np.random.Generator
    order: np.ndarray
    sweep_count: int = 0
    seed: int = 0
    replica: int = 0
    _vis: tuple = field(default=None, repr=False)
    _stamp: int = 0

    @property
    def config(self) -> EdgeConfiguration:
        return EdgeConfiguration(self.box.edges, self.bits)

    @property
    def rng_state(self) -> dict:
        return self.rng.bit_generator.state

    def _buffers(self):
        if self._vis is None:
            n = self.connectivity.n_nodes
            self._vis = (np.zeros(n, dtype=np.int64), np.zeros(n, dtype=np.int64))
        return self._vis

    def joined_without(self, k: int) -> bool:
        """Whether the endpoints of edge ``k`` are wired without using ``k``."""
        g = self.connectivity
        va, vb = self._buffers()
        n = g.n_nodes
        self._stamp += 1
        e = self.box.edge_index
        return bool(_kernels.wired_without(k, e[k, 0], e[k, 1], self.bits, g.ptr, g.nbr, g.edge,
                                           va, vb, np.empty(n, np.int64), np.empty(n, np.int64),
                                           self._stamp))

    def run(self, sweeps: int, hist: np.ndarray | None = None) -> "ChainState":
        """Advance by ``sweeps`` full scans over the free edges."""
        if hist is None:
            hist = np.zeros(0, dtype=np.int64)
        if len(self.order) == 0 or sweeps <= 0:
            self.sweep_count += max(sweeps, 0)
            return self
        va, vb = self._buffers()
        g = self.connectivity
        e = self.box.edge_index
        per_chunk = max(1, UNIFORM_CHUNK // len(self.order))
        done = 0
        while done < sweeps:
            m = min(per_chunk, sweeps - done)
            u = self.rng.random((m, len(self.order)))
            self._stamp = _kernels.heat_bath(self.bits, e[:, 0], e[:, 1], self.order, u,
                                             self.params.p, self.params.q, g.ptr, g.nbr, g.edge,
                                             va, vb, self._stamp, hist)
            done += m
        self.sweep_count += sweeps
        return self


def new_chain(V: LatticeBox, pi, params: Parameters, seed: int = 0, replica: int = 0,
              forced_open: Iterable[Edge] = (), forced_closed: Iterable[Edge] = (),
              init: str = "closed") -> ChainState:
    """Fresh chain; forced edges are fixed at their state and never resampled."""
    pi = _as_partition(V, pi)
    lookup = V.edge_lookup
    fo = {lookup[e] for e in forced_open}
    fc = {lookup[e] for e in forced_closed}
    if fo & fc:
        raise ValueError("an edge cannot be forced both open and closed")
    rng = replica_rng(seed, replica)
    if init == "closed":
        bits = np.zeros(V.n_edges, dtype=np.uint8)
    elif init == "open":
        bits = np.ones(V.n_edges, dtype=np.uint8)
    elif init == "random":
        bits = (rng.random(V.n_edges) < params.p).astype(np.uint8)
    else:
        raise ValueError(f"unknown init {init!r}")
    bits[list(fo)] = 1
    bits[list(fc)] = 0
    free = np.array(sorted(set(range(V.n_edges)) - fo - fc), dtype=np.int64)
    return ChainState(V, pi, params, bits, WiringGraph.build(V, pi), rng, free,
                      seed=seed, replica=replica)


def heat_bath_sweep(state: ChainState, sweeps: int = 1) -> ChainState:
    return state.run(sweeps)


def default_schedule(params: Parameters) -> tuple[int, int]:
    """``(burn_in, sweeps)`` in full sweeps.

    At ``q = 1`` a single sweep already is an exact draw, so no burn-in is
    spent; otherwise 64 sweeps (64 |E| edge updates) precede the reading.
    """
    if params.q == 1.0:
        return 0, 1
    return 64, 1


def sample_with_forced_edges(V: LatticeBox, pi, params: Parameters, forced_closed=(), forced_open=(),
                             sweeps: int | None = None, seed: int = 0, replica: int = 0) -> EdgeConfiguration:
    """One draw from the FK measure conditioned on the forced edge states."""
    if sweeps is None:
        b, s = default_schedule(params)
        sweeps = b + s
    chain = new_chain(V, pi, params, seed, replica, forced_open=forced_open, forced_closed=forced_closed)
    return chain.run(sweeps).config


def sample_bits(V: LatticeBox, pi, params: Parameters, replicas: int, sweeps: int | None = None,
                burn_in: int | None = None, seed: int = 0, start: int = 0,
                forced_open=(), forced_closed=(), init: str = "closed") -> Iterator[np.ndarray]:
    """Yield the final bits of replicas ``start .. start + replicas - 1``, one chain each."""
    b0, s0 = default_schedule(params)
    burn_in = b0 if burn_in is None else burn_in
    sweeps = s0 if sweeps is None else sweeps
    pi = _as_partition(V, pi)
    template = new_chain(V, pi, params, seed, 0, forced_open, forced_closed, init)
    for r in range(start, start + replicas):
        chain = ChainState(V, pi, params, template.bits.copy(), template.connectivity,
                           replica_rng(seed, r), template.order, seed=seed, replica=r)
        if init == "random":
            fixed = np.ones(V.n_edges, dtype=bool)
            fixed[template.order] = False
            chain.bits[~fixed] = (chain.rng.random(len(template.order)) < params.p)
        chain.run(burn_in + sweeps)
        yield chain.bits


@dataclass(frozen=True)
class EstimateReport:
    trials: int
    successes: int
    point: float
    ci_low: float
    ci_high: float
    seed: int
    p: float
    q: float

    @property
    def stderr(self) -> float:
        return math.sqrt(self.point * (1 - self.point) / self.trials) if self.trials else math.nan

    def resolvable(self) -> bool:
        """Interval strictly inside (0, 1)."""
        return self.ci_low > 0.0 and self.ci_high < 1.0


def wilson_report(successes: int, trials: int, seed: int, params: Parameters) -> EstimateReport:
    if trials < 1:
        raise ValueError("at least one trial is required")
    ci = binomtest(int(successes), int(trials)).proportion_ci(0.95, method="wilson")
    point = successes / trials
    return EstimateReport(int(trials), int(successes), point, min(float(ci.low), point),
                          max(float(ci.high), point), int(seed), params.p, params.q)


def count_hits(event: Callable[[np.ndarray], bool], V: LatticeBox, pi, params: Parameters,
               replicas: int, sweeps=None, burn_in=None, seed: int = 0, threads: int = 1,
               **kwargs) -> int:
    """Number of replicas whose final configuration satisfies ``event`` (called on raw bits)."""
    if replicas < 1:
        raise ValueError("replicas must be >= 1")
    threads = max(1, int(threads))

    def chunk(lo, hi):
        return sum(bool(event(b)) for b in sample_bits(V, pi, params, hi - lo, sweeps, burn_in,
                                                       seed, start=lo, **kwargs))

    if threads == 1:
        return chunk(0, replicas)
    bounds = np.linspace(0, replicas, threads + 1).astype(int)
    with ThreadPoolExecutor(threads) as ex:
        parts = list(ex.map(chunk, bounds[:-1], bounds[1:]))
    return int(sum(parts))


def estimate_event(event: Callable[[np.ndarray], bool], V: LatticeBox, pi, params: Parameters,
                   replicas: int, sweeps=None, burn_in=None, seed: int = 0, threads: int = 1,
                   **kwargs) -> EstimateReport:
    """Independent chains, one reading each; 95% Wilson interval."""
    hits = count_hits(event, V, pi, params, replicas, sweeps, burn_in, seed, threads, **kwargs)
    return wilson_report(hits, replicas, seed, params)


def empirical_law(V: LatticeBox, pi, params: Parameters, sweeps: int, seed: int = 0,
                  burn_in: int = 1000, **kwargs) -> np.ndarray:
    """Frequencies of every atom visited by one chain, counted after each edge update."""
    if V.n_edges > 24:
        raise ValueError("atom histograms are limited to 24 edges")
    chain = new_chain(V, pi, params, seed, **kwargs)
    chain.run(burn_in)
    hist = np.zeros(1 << V.n_edges, dtype=np.int64)
    chain.run(sweeps, hist)
    return hist / hist.sum()


def total_variation(a: np.ndarray, b: np.ndarray) -> float:
    return 0.5 * float(np.abs(np.asarray(a) - np.asarray(b)).sum())
