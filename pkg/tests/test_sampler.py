import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import rect
from fkperc import _kernels
from fkperc.clusters import detect_crossing, label_clusters
from fkperc.fk_core import BoundaryPartition, Parameters, exact_distribution
from fkperc.sampler import (empirical_law, estimate_event, new_chain, sample_bits, sample_with_forced_edges,
                            total_variation, wilson_report)


def test_single_edge_one_sweep_is_exact():
    b = rect(2, 1)
    prm = Parameters(0.6, 2.0)
    rep = estimate_event(lambda x: x[0] == 1, b, "free", prm, 20000, sweeps=1, burn_in=0, seed=4)
    target = prm.p_isolated
    assert abs(rep.point - target) < 4 * math.sqrt(target * (1 - target) / rep.trials)


def test_q1_sweep_is_bernoulli():
    b = rect(4, 4)
    prm = Parameters(0.37, 1.0)
    draws = np.array(list(sample_bits(b, "wired", prm, 4000, seed=9)))
    se = math.sqrt(0.37 * 0.63 / len(draws))
    assert np.all(np.abs(draws.mean(axis=0) - 0.37) < 4.5 * se)
    # pairwise independence of two neighbouring edges
    both = (draws[:, 0] & draws[:, 1]).mean()
    assert abs(both - 0.37 ** 2) < 5 * math.sqrt(0.37 ** 2 * (1 - 0.37 ** 2) / len(draws))


@pytest.mark.parametrize("p", [0.3, 0.5, 0.7])
@pytest.mark.parametrize("q", [1.0, 1.5, 2.0, 4.0])
@pytest.mark.parametrize("pi", ["free", "wired"])
def test_validation_gate_small_box(p, q, pi):
    b = rect(2, 3)
    prm = Parameters(p, q)
    emp = empirical_law(b, pi, prm, sweeps=100000, seed=17)
    assert total_variation(emp, exact_distribution(b, pi, prm).probs) < 0.02


def test_forced_edges():
    b = rect(3, 3)
    prm = Parameters(0.8, 2.0)
    w = sample_with_forced_edges(b, "free", prm, forced_closed=b.edges, seed=1)
    assert w.n_open() == 0
    with pytest.raises(ValueError):
        sample_with_forced_edges(b, "free", prm, forced_closed=b.edges[:2], forced_open=b.edges[1:3])
    w = sample_with_forced_edges(b, "free", prm, forced_open=b.edges[:3], forced_closed=b.edges[3:5], seed=2)
    assert all(w[e] == 1 for e in b.edges[:3]) and all(w[e] == 0 for e in b.edges[3:5])


@pytest.mark.parametrize("pi", ["free", "wired"])
def test_forced_slice_matches_enumeration(pi):
    b = rect(2, 3)
    prm = Parameters(0.55, 2.5)
    fo, fc = [b.edges[0]], [b.edges[4]]
    emp = empirical_law(b, pi, prm, sweeps=100000, seed=5, forced_open=fo, forced_closed=fc)
    law = exact_distribution(b, pi, prm)
    bm = law.bits_matrix()
    keep = (bm[:, 0] == 1) & (bm[:, 4] == 0)
    cond = np.where(keep, law.probs, 0.0)
    cond /= cond.sum()
    assert total_variation(emp, cond) < 0.02


def test_estimate_event_basics():
    b = rect(3, 3)
    prm = Parameters(0.5, 2.0)
    rep = estimate_event(lambda x: True, b, "free", prm, 50, seed=3)
    assert rep.point == 1.0 and rep.trials == 50
    with pytest.raises(ValueError):
        estimate_event(lambda x: True, b, "free", prm, 0)
    q1 = estimate_event(lambda x: x[2] == 1, b, "free", Parameters(0.42, 1.0), 20000, seed=8)
    assert abs(q1.point - 0.42) < 4 * q1.stderr


def test_determinism_across_threads():
    b = rect(4, 4)
    prm = Parameters(0.5, 2.0)
    ev = lambda x: bool(detect_crossing(label_clusters(x, b), 1))
    a = estimate_event(ev, b, "wired", prm, 60, sweeps=1, burn_in=5, seed=77, threads=1)
    c = estimate_event(ev, b, "wired", prm, 60, sweeps=1, burn_in=5, seed=77, threads=4)
    assert a == c
    assert a == estimate_event(ev, b, "wired", prm, 60, sweeps=1, burn_in=5, seed=77)


def test_crossing_matches_direct_bernoulli():
    b = rect(8, 8)
    prm = Parameters(0.5, 1.0)
    ev = lambda x: bool(detect_crossing(label_clusters(x, b), 1))
    mc = estimate_event(ev, b, "free", prm, 8000, seed=21)
    rng = np.random.default_rng(99)
    hits = sum(ev((rng.random(b.n_edges) < 0.5).astype(np.uint8)) for _ in range(8000))
    direct = wilson_report(hits, 8000, 99, prm)
    assert abs(mc.point - direct.point) <= 1.96 * math.hypot(mc.stderr, direct.stderr)


def test_monotone_in_p():
    b = rect(5, 5)
    ev = lambda x: bool(detect_crossing(label_clusters(x, b), 2))
    reps = [estimate_event(ev, b, "free", Parameters(p, 2.0), 1500, seed=3) for p in (0.4, 0.55, 0.7)]
    for lo, hi in zip(reps, reps[1:]):
        assert lo.ci_low <= hi.ci_high


@pytest.mark.parametrize("pi", ["free", "wired"])
def test_connectivity_coherence(pi):
    b = rect(5, 4)
    chain = new_chain(b, pi, Parameters(0.5, 2.0), seed=2, init="random")
    part = BoundaryPartition.named(b, pi)
    cls, n_cls = part.class_array()
    e = b.edge_index
    for _ in range(5):
        chain.run(3)
        for k in range(b.n_edges):
            bits = chain.bits.copy()
            bits[k] = 0
            lab, _ = _kernels.label_open(b.n_vertices, e[:, 0], e[:, 1], bits, cls, n_cls)
            assert chain.joined_without(k) == (lab[e[k, 0]] == lab[e[k, 1]])


@given(st.integers(1, 500), st.data())
def test_wilson_report_invariants(trials, data):
    s = data.draw(st.integers(0, trials))
    r = wilson_report(s, trials, 0, Parameters(0.5, 1.0))
    assert 0.0 <= r.ci_low <= r.point <= r.ci_high <= 1.0
    assert r.successes <= r.trials
    assert r.resolvable() == (0 < s < trials)
