"""Monte Carlo and exact experiments over grids of box sizes."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import clusters as ev
from .duality import verify_duality_identity
from .fits import DecayFit, RateComparison, compare_scalings, fit_decay, fit_line
from .fk_core import DEFAULT_CAP, EnumerationCapError, Parameters, exact_distribution
from .geometry import LatticeBox, symmetric_box
from .renorm import build_partition, compute_X, domination_probe, event_Z
from .sampler import EstimateReport, count_hits, wilson_report

EVENTS = ("Uc", "Rgc", "Ogc", "Vc", "Zc", "Kc", "bve")
NEEDS_THETA = {"Vc", "Kc", "bve"}


def g_function(family: str, coef: float) -> Callable[[int], float]:
    if family == "log":
        return lambda n: coef * math.log(n)
    if family == "sqrt":
        return lambda n: coef * math.sqrt(n)
    raise ValueError(f"unknown g family {family!r}")


def exact_report(value: float, params: Parameters, seed: int = 0) -> EstimateReport:
    return EstimateReport(0, 0, float(value), float(value), float(value), seed, params.p, params.q)


# -- theta ----------------------------------------------------------------------------

def origin_to_boundary(V: LatticeBox) -> Callable[[np.ndarray], bool]:
    o = V.index((0, 0))

    def event(bits):
        lab = ev.label_clusters(bits, V)
        return bool(lab.touches_boundary[lab.labels[o]])
    return event


@dataclass
class ThetaScan:
    params: Parameters
    ns: list
    reports: list
    boundary: str = "free"

    @property
    def monotone(self) -> bool:
        """Point estimates non-increasing in ``n``."""
        pts = [r.point for r in self.reports]
        return all(a >= b for a, b in zip(pts, pts[1:]))

    def agree(self, i: int, j: int, z: float = 1.959963984540054) -> bool:
        """Two estimates differ by less than ``z`` joint standard errors."""
        a, b = self.reports[i], self.reports[j]
        se = math.hypot(a.stderr, b.stderr)
        return abs(a.point - b.point) <= z * se

    def last(self) -> tuple[int, EstimateReport]:
        return self.ns[-1], self.reports[-1]


def estimate_theta(params: Parameters, ns, replicas: int, seed: int = 0, threads: int = 1,
                   boundary: str = "free", sweeps=None, burn_in=None) -> ThetaScan:
    """Free-boundary estimates of the origin-to-boundary connection probability in ``B(n)``."""
    reports = []
    for n in ns:
        V = symmetric_box(n)
        hits = count_hits(origin_to_boundary(V), V, boundary, params, replicas, sweeps, burn_in,
                          seed, threads)
        reports.append(wilson_report(hits, replicas, seed, params))
    return ThetaScan(params, list(ns), reports, boundary)


# -- two-point decay ---------------------------------------------------------------------

def axis_pairs(V: LatticeBox, max_distance: int | None = None):
    """``(x, x + d e_1)`` for ``d = 1 .. max_distance`` along the row through the box centre."""
    y = (V.lo[1] + V.hi[1] + 1) // 2
    x0 = V.lo[0] + 1
    dmax = V.shape[0] - 1 if max_distance is None else min(max_distance, V.shape[0] - 1)
    return [((x0, y), (x0 + d, y)) for d in range(1, dmax + 1)]


def connection_event(V: LatticeBox, x, y) -> Callable[[np.ndarray], bool]:
    """Open path from ``x`` to ``y`` inside the box; boundary wiring is not a path."""
    a, b = V.index(x), V.index(y)

    def event(bits):
        lab = ev.label_clusters(bits, V)
        return bool(lab.labels[a] == lab.labels[b])
    return event


@dataclass
class DecayScan:
    params: Parameters
    box: LatticeBox
    pairs: list
    reports: list
    fit: DecayFit
    exact: bool


def decay_scan(params: Parameters, V: LatticeBox, pairs=None, replicas: int = 10000, seed: int = 0,
               boundary: str = "wired", threads: int = 1, cap: int = DEFAULT_CAP,
               sweeps=None, burn_in=None) -> DecayScan:
    """Connection probabilities against distance, exact when the box fits the enumeration cap."""
    pairs = axis_pairs(V) if pairs is None else list(pairs)
    dist = [max(abs(x[0] - y[0]), abs(x[1] - y[1])) for x, y in pairs]
    exact = V.n_edges <= cap and 0.0 < params.p < 1.0
    reports = []
    if exact:
        law = exact_distribution(V, boundary, params, cap)
        bm = law.bits_matrix()
        for x, y in pairs:
            e = connection_event(V, x, y)
            hit = np.array([e(b) for b in bm])
            reports.append(exact_report(float(law.probs[hit].sum()), params, seed))
    else:
        for x, y in pairs:
            hits = count_hits(connection_event(V, x, y), V, boundary, params, replicas, sweeps,
                              burn_in, seed, threads)
            reports.append(wilson_report(hits, replicas, seed, params))
    return DecayScan(params, V, pairs, reports, fit_decay(dist, reports, exact), exact)


# -- event scans ---------------------------------------------------------------------------

@dataclass
class EventContext:
    g: Callable[[int], float]
    eps: float
    delta: float
    theta_ref: float | None
    N: int | None


def failure_event(name: str, V: LatticeBox, n: int, ctx: EventContext) -> Callable[[np.ndarray], bool]:
    """Indicator on raw bits of the complement event (or the excess event for ``bve``)."""
    if name == "Uc":
        return lambda b: not ev.event_U(b, V).holds
    if name == "Rgc":
        g = ctx.g(n)
        return lambda b: not ev.event_Rg(b, V, g).holds
    if name == "Ogc":
        g = ctx.g(n)
        return lambda b: not ev.event_Og(b, V, g).holds
    if name == "Vc":
        return lambda b: not ev.event_V(b, V, ctx.delta, ctx.theta_ref).holds
    if name == "Kc":
        l = max(1.0, ctx.g(n))
        return lambda b: not ev.event_K(b, V, ctx.eps, l, ctx.theta_ref).holds
    if name == "bve":
        thr = (ctx.theta_ref + ctx.delta) * V.n_vertices
        return lambda b: ev.boundary_cluster_volume(ev.label_clusters(b, V)) > thr
    if name == "Zc":
        part = build_partition(V, ctx.N)
        return lambda b: not event_Z(compute_X(b, part), ctx.delta).holds
    raise ValueError(f"unknown event {name!r}; expected one of {EVENTS}")


@dataclass
class EventScan:
    event: str
    params: Parameters
    ns: list
    reports: list
    comparison: RateComparison
    theta: dict | None = None
    flags: list = field(default_factory=list)


def event_scan(event: str, params: Parameters, ns, replicas: int, seed: int = 0, boundary: str = "free",
               ctx: EventContext | None = None, threads: int = 1, sweeps=None, burn_in=None,
               theta_provenance: dict | None = None) -> EventScan:
    """Failure frequencies per ``n`` and the surface-versus-volume comparison."""
    ctx = ctx or EventContext(g_function("log", 4.0), 0.1, 0.1, None, None)
    if event in NEEDS_THETA and ctx.theta_ref is None:
        raise ValueError(f"event {event} needs a reference density")
    if event == "Zc" and ctx.N is None:
        raise ValueError("event Zc needs a block scale N")
    reports = []
    for n in ns:
        V = symmetric_box(n)
        hits = count_hits(failure_event(event, V, n, ctx), V, boundary, params, replicas, sweeps,
                          burn_in, seed, threads)
        reports.append(wilson_report(hits, replicas, seed, params))
    flags = ["ok" if r.resolvable() else "below resolution" for r in reports]
    return EventScan(event, params, list(ns), reports, compare_scalings(ns, reports),
                     theta_provenance, flags)


# -- lower bound ------------------------------------------------------------------------------

@dataclass
class LowerBoundPoint:
    n: int
    report: EstimateReport
    floor: float
    resolvable: bool
    holds: bool
    exact: bool


def lower_bound_check(params: Parameters, ns, replicas: int, seed: int = 0, threads: int = 1,
                      boundary: str = "free", sweeps=None, burn_in=None) -> list[LowerBoundPoint]:
    """Compare ``P[U(n)^c]`` with ``(1 - p)^n``; boxes without edges are evaluated exactly."""
    out = []
    for n in ns:
        V = symmetric_box(n)
        floor = (1.0 - params.p) ** n
        if V.n_edges == 0:
            # a lone vertex crosses itself, so U(n) is certain
            rep = exact_report(0.0, params, seed)
            out.append(LowerBoundPoint(n, rep, floor, False, rep.point >= floor, True))
            continue
        hits = count_hits(lambda b: not ev.event_U(b, V).holds, V, boundary, params, replicas,
                          sweeps, burn_in, seed, threads)
        rep = wilson_report(hits, replicas, seed, params)
        ok = rep.point >= floor - 2 * rep.stderr
        out.append(LowerBoundPoint(n, rep, floor, rep.resolvable(), ok, False))
    return out


# -- duality grid ---------------------------------------------------------------------------

DUALITY_P = (0.3, 0.5, 0.8)
DUALITY_Q = (1.0, 1.7, 2.0, 4.0)


def small_boxes(max_edges: int = 12) -> list[LatticeBox]:
    """Every box shape with at least one and at most ``max_edges`` edges."""
    out = []
    for w in range(1, max_edges + 2):
        for h in range(1, max_edges + 2):
            b = LatticeBox.from_corner((0, 0), (w, h))
            if 1 <= b.n_edges <= max_edges:
                out.append(b)
    return out


def duality_grid(boxes=None, ps=DUALITY_P, qs=DUALITY_Q, cap: int = DEFAULT_CAP) -> list[tuple]:
    """``(box, p, q, max discrepancy)`` over the grid."""
    boxes = small_boxes() if boxes is None else boxes
    rows = []
    for b in boxes:
        for p in ps:
            for q in qs:
                rows.append((b, p, q, verify_duality_identity(b, Parameters(p, q), cap)))
    return rows


# -- domination -----------------------------------------------------------------------------

@dataclass
class DominationScan:
    params: Parameters
    Ns: list
    reports: list
    slope: float
    r2: float
    decreasing: bool

    @property
    def C(self) -> float:
        return -self.slope


def domination_scan(params: Parameters, Ns, replicas: int, seed: int = 0, boundary: str = "free",
                    boxes=None, min_bin: int = 100, **kw) -> DominationScan:
    """``P[X_0 = 0]`` across block scales, fitted as ``log P ~ -C sqrt(N)``."""
    reports = []
    for i, N in enumerate(Ns):
        V = symmetric_box(3 * N) if boxes is None else boxes[i]
        reports.append(domination_probe(V, boundary, params, N, replicas, seed, min_bin, **kw))
    pts = [r.estimate for r in reports]
    decreasing = all(a > b for a, b in zip(pts, pts[1:]))
    if all(v > 0 for v in pts) and len(pts) >= 2:
        lf = fit_line([math.sqrt(N) for N in Ns], [math.log(v) for v in pts])
        slope, r2 = lf.slope, lf.r2
    else:
        slope, r2 = math.nan, math.nan
    return DominationScan(params, list(Ns), reports, slope, r2, decreasing)
