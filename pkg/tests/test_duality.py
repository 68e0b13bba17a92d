import numpy as np
import pytest
from hypothesis import given, strategies as st
from numba import njit

from conftest import rect
from fkperc import _kernels
from fkperc.clusters import detect_crossing, label_clusters
from fkperc.duality import (DualityContext, dual_configuration, dual_crossing, dual_interior_law, dual_parameter,
                            primal_configuration, self_dual_point, transport_event, verify_duality_identity)
from fkperc.fk_core import EdgeConfiguration, EnumerationCapError, Parameters, exact_distribution
from fkperc.geometry import symmetric_box


def test_dual_parameter_examples():
    assert dual_parameter(Parameters(0.5, 1.0)).p == pytest.approx(0.5, abs=1e-15)
    d = dual_parameter(Parameters(0.7, 3.0))
    assert d.p == pytest.approx(0.5625, abs=1e-15) and d.q == 3.0
    assert dual_parameter(d).p == pytest.approx(0.7, abs=1e-14)
    assert dual_parameter(Parameters(0.0, 2.0)).p == 1.0
    assert dual_parameter(Parameters(1.0, 2.0)).p == 0.0
    for q in (1.0, 2.0, 4.0, 7.3):
        ps = self_dual_point(q)
        assert dual_parameter(Parameters(ps, q)).p == pytest.approx(ps, abs=1e-15)


def test_involution_on_grid():
    for p in np.linspace(0, 1, 10):
        for q in np.linspace(1, 10, 10):
            back = dual_parameter(dual_parameter(Parameters(p, q)))
            assert abs(back.p - p) < 1e-14


@given(st.floats(0, 1), st.floats(0, 1), st.floats(1, 50))
def test_dual_parameter_decreasing(a, b, q):
    lo, hi = sorted((a, b))
    if hi - lo > 1e-9:
        assert dual_parameter(Parameters(lo, q)).p > dual_parameter(Parameters(hi, q)).p


@given(st.integers(1, 4), st.integers(1, 4), st.integers(0, 2 ** 32 - 1))
def test_dual_configuration_complement(w, h, seed):
    b = rect(w, h)
    ctx = DualityContext(b)
    bits = np.random.default_rng(seed).integers(0, 2, b.n_edges).astype(np.uint8)
    d = dual_configuration(bits, ctx)
    assert d.n_open() + int(bits.sum()) == b.n_edges
    assert np.array_equal(primal_configuration(d, ctx).bits, bits)
    assert dual_configuration(np.ones(b.n_edges, np.uint8), ctx).n_open() == 0


def test_transport_whole_space_and_identity_on_2x2():
    b = rect(2, 2)
    ctx = DualityContext(b)
    prm = Parameters(0.6, 2.0)
    whole = transport_event(lambda w: True, ctx)
    assert whole(dual_configuration(np.zeros(4, np.uint8), ctx))
    A = lambda w: bool(detect_crossing(label_clusters(w, b), 1))
    A_hat = transport_event(A, ctx)
    primal = exact_distribution(b, "free", prm).probability(A)
    law = dual_interior_law(ctx, dual_parameter(prm))
    total = 0.0
    for mask, pr in enumerate(law):
        bits = ((mask >> np.arange(4)) & 1).astype(np.uint8)
        if A_hat(EdgeConfiguration(ctx.dual_edges, bits)):
            total += pr
    assert abs(primal - total) < 1e-12


@pytest.mark.parametrize("shape", [(2, 2), (1, 3), (3, 1), (2, 3), (3, 2)])
@pytest.mark.parametrize("p,q", [(0.8, 4.0), (0.3, 1.7), (0.5, 2.0)])
def test_identity_full_and_marginal_routes(shape, p, q):
    b = rect(*shape)
    prm = Parameters(p, q)
    assert verify_duality_identity(b, prm, full=True) < 1e-10
    assert verify_duality_identity(b, prm, full=False) < 1e-10


@pytest.mark.parametrize("p", [0.2, 0.65])
def test_identity_q1_is_exact(p):
    assert verify_duality_identity(rect(2, 3), Parameters(p, 1.0)) < 1e-14


def test_identity_cap():
    with pytest.raises(EnumerationCapError):
        verify_duality_identity(symmetric_box(4), Parameters(0.5, 2.0))


@njit(cache=True)
def _complementarity_violations(nv, eu, ev, dn, du, dv, dmap, left, right, top, bottom):
    bad = 0
    E = eu.shape[0]
    for mask in range(1 << E):
        parent = np.arange(nv)
        for k in range(E):
            if (mask >> k) & 1:
                _kernels.union(parent, eu[k], ev[k])
        lr = False
        for a in left:
            for b in right:
                if _kernels.find(parent, a) == _kernels.find(parent, b):
                    lr = True
        dpar = np.arange(dn)
        for k in range(E):
            if not (mask >> k) & 1:
                j = dmap[k]
                _kernels.union(dpar, du[j], dv[j])
        tb = False
        for a in top:
            for b in bottom:
                if _kernels.find(dpar, a) == _kernels.find(dpar, b):
                    tb = True
        if lr == tb:
            bad += 1
    return bad


@pytest.mark.parametrize("shape", [(w, h) for w in range(1, 5) for h in range(1, 5)])
def test_crossing_complementarity_exhaustive(shape):
    """No primal left-right crossing exactly when the interior dual edges cross top to bottom."""
    b = rect(*shape)
    if b.n_edges == 0:
        return
    ctx = DualityContext(b)
    db = ctx.dual.box
    e, de = b.edge_index, db.edge_index
    face = lambda box, i: np.flatnonzero(box.face_mask(i))
    bad = _complementarity_violations(b.n_vertices, e[:, 0], e[:, 1], db.n_vertices, de[:, 0], de[:, 1],
                                      ctx.edge_bijection, face(b, -1), face(b, 1), face(db, 2), face(db, -2))
    assert bad == 0


@given(st.integers(2, 6), st.integers(2, 6), st.integers(0, 2 ** 32 - 1))
def test_dual_crossing_helper_agrees(w, h, seed):
    b = rect(w, h)
    ctx = DualityContext(b)
    bits = np.random.default_rng(seed).integers(0, 2, b.n_edges).astype(np.uint8)
    primal = bool(detect_crossing(label_clusters(bits, b), 1))
    assert dual_crossing(bits, ctx, 2) != primal
