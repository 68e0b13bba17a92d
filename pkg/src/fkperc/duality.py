"""Planar duality between free primal and wired dual FK measures.

A primal configuration on ``E(B)`` maps to the dual configuration on the
interior dual edges obtained by flipping every edge state; dual edges
along the faces of the dual box carry no constraint and, when dual
connectivity is evaluated, are never used as path edges.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

from . import _kernels
from .fk_core import (DEFAULT_CAP, BoundaryPartition, EdgeConfiguration, EnumerationCapError, Parameters,
                      box_bits, exact_distribution, exact_marginal)
from .geometry import DualBox, Edge, LatticeBox, crossing_dual_edge, dual_box


def dual_parameter(params: Parameters) -> Parameters:
    """``q (1 - p) / (p + q (1 - p))`` at the same ``q``."""
    p, q = params.p, params.q
    return Parameters(q * (1.0 - p) / (p + q * (1.0 - p)), q)


def self_dual_point(q: float) -> float:
    return q ** 0.5 / (1.0 + q ** 0.5)


@dataclass(frozen=True)
class DualityContext:
    primal: LatticeBox

    @cached_property
    def dual(self) -> DualBox:
        return dual_box(self.primal)

    @cached_property
    def edge_bijection(self) -> np.ndarray:
        """Index in the dual box edge list of the dual edge crossing primal edge ``k``."""
        lookup = self.dual.box.edge_lookup
        out = np.array([lookup[crossing_dual_edge(e)] for e in self.primal.edges], dtype=np.int64)
        interior = set(self.dual.interior_edge_ids.tolist())
        if len(set(out.tolist())) != len(out) or set(out.tolist()) != interior:
            raise AssertionError("primal edges do not biject onto the interior dual edges")
        return out

    @cached_property
    def dual_edges(self) -> tuple[Edge, ...]:
        """Interior dual edges, ordered like the primal edges they cross."""
        edges = self.dual.box.edges
        return tuple(edges[j] for j in self.edge_bijection)


def dual_configuration(omega, ctx: DualityContext) -> EdgeConfiguration:
    """Flip every edge and move it to the crossing dual edge."""
    bits = box_bits(omega, ctx.primal)
    return EdgeConfiguration(ctx.dual_edges, 1 - bits)


def primal_configuration(omega_d: EdgeConfiguration, ctx: DualityContext) -> EdgeConfiguration:
    """Inverse of :func:`dual_configuration`; extra boundary dual edges are ignored."""
    d = omega_d.as_dict()
    bits = np.array([1 - d[e] for e in ctx.dual_edges], dtype=np.uint8)
    return EdgeConfiguration(ctx.primal.edges, bits)


def transport_event(A: Callable[[EdgeConfiguration], bool], ctx: DualityContext
                    ) -> Callable[[EdgeConfiguration], bool]:
    """The dual event: dual configurations whose interior agrees with the dual of some ``omega`` in ``A``.

    Interior dual edges determine ``omega`` uniquely, so membership is
    decided by mapping back and asking ``A``.
    """
    def A_hat(omega_d: EdgeConfiguration) -> bool:
        return bool(A(primal_configuration(omega_d, ctx)))
    return A_hat


def dual_crossing(omega, ctx: DualityContext, axis: int) -> bool:
    """Open dual path between the two ``axis`` faces of the dual box using interior dual edges only."""
    db = ctx.dual.box
    bits = np.zeros(db.n_edges, dtype=np.uint8)
    bits[ctx.edge_bijection] = 1 - box_bits(omega, ctx.primal)
    e = db.edge_index
    labels, n = _kernels.label_open(db.n_vertices, e[:, 0], e[:, 1], bits,
                                    np.full(db.n_vertices, -1, dtype=np.int64), 0)
    lo = set(labels[db.face_mask(-axis)].tolist())
    hi = set(labels[db.face_mask(axis)].tolist())
    return bool(lo & hi)


def dual_interior_law(ctx: DualityContext, params: Parameters, cap: int = DEFAULT_CAP,
                      full: bool | None = None) -> np.ndarray:
    """Wired dual-box law of the interior dual edges, indexed by primal-ordered bit masks.

    ``full=True`` enumerates every dual edge; ``full=False`` sums out the
    face edges analytically (their endpoints share the wired class).  By
    default the full route is used whenever it fits the cap.
    """
    db = ctx.dual.box
    pi = BoundaryPartition.wired(db)
    if full is None:
        full = db.n_edges <= cap
    if full:
        dist = exact_distribution(db, pi, params, cap)
        idx = np.zeros(len(dist.masks), dtype=np.int64)
        for k, j in enumerate(ctx.edge_bijection):
            idx |= ((dist.masks >> j) & 1) << k
        return np.bincount(idx, weights=dist.probs, minlength=1 << len(ctx.edge_bijection))
    return exact_marginal(db, pi, params, ctx.edge_bijection, cap)


def verify_duality_identity(V: LatticeBox, params: Parameters, cap: int = DEFAULT_CAP,
                            full: bool | None = None) -> float:
    """Max over primal atoms of the gap between the free primal and wired dual probabilities."""
    if V.n_edges > cap:
        raise EnumerationCapError(f"primal box has {V.n_edges} edges, cap is {cap}")
    ctx = DualityContext(V)
    primal = exact_distribution(V, "free", params, cap)
    dual = dual_interior_law(ctx, dual_parameter(params), cap, full)
    # primal atom with mask m corresponds to the dual interior mask ~m
    comp = (~primal.masks) & ((1 << V.n_edges) - 1)
    return float(np.max(np.abs(primal.probs - dual[comp])))
