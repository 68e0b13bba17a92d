"""Compiled inner loops: union-find labeling, atom enumeration, heat-bath updates."""

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def find(parent, x):
    root = x
    while parent[root] != root:
        root = parent[root]
    while parent[x] != root:
        nxt = parent[x]
        parent[x] = root
        x = nxt
    return root


@njit(cache=True, nogil=True)
def union(parent, a, b):
    ra = find(parent, a)
    rb = find(parent, b)
    if ra == rb:
        return False
    if ra < rb:
        parent[rb] = ra
    else:
        parent[ra] = rb
    return True


@njit(cache=True, nogil=True)
def label_open(n_vertices, eu, ev, bits, cls, n_cls):
    """Canonical component labels of vertices under open edges plus class wiring.

    Labels are numbered by first appearance in vertex order.  ``cls[v]`` is
    the wiring class of ``v`` or -1.
    """
    parent = np.arange(n_vertices + n_cls)
    for v in range(n_vertices):
        if cls[v] >= 0:
            union(parent, v, n_vertices + cls[v])
    for k in range(eu.shape[0]):
        if bits[k]:
            union(parent, eu[k], ev[k])
    labels = np.empty(n_vertices, dtype=np.int64)
    remap = np.full(n_vertices + n_cls, -1, dtype=np.int64)
    nxt = 0
    for v in range(n_vertices):
        r = find(parent, v)
        if remap[r] < 0:
            remap[r] = nxt
            nxt += 1
        labels[v] = remap[r]
    return labels, nxt


@njit(cache=True, nogil=True)
def cluster_stats(labels, n_labels, coords, boundary):
    """Per-cluster volume, coordinate extremes and boundary contact."""
    vol = np.zeros(n_labels, dtype=np.int64)
    mn = np.full((n_labels, 2), np.iinfo(np.int64).max, dtype=np.int64)
    mx = np.full((n_labels, 2), np.iinfo(np.int64).min, dtype=np.int64)
    touch = np.zeros(n_labels, dtype=np.bool_)
    for v in range(labels.shape[0]):
        c = labels[v]
        vol[c] += 1
        for a in range(2):
            x = coords[v, a]
            if x < mn[c, a]:
                mn[c, a] = x
            if x > mx[c, a]:
                mx[c, a] = x
        if boundary[v]:
            touch[c] = True
    return vol, mn, mx, touch


@njit(cache=True, nogil=True)
def enumerate_atoms(n_vertices, eu, ev, cls, n_cls):
    """Cluster count and open-edge count of every atom ``mask in [0, 2^E)``.

    Bit ``k`` of ``mask`` is the state of edge ``k``.
    """
    n_edges = eu.shape[0]
    n_atoms = 1 << n_edges
    base = np.arange(n_vertices + n_cls)
    merged = 0
    for v in range(n_vertices):
        if cls[v] >= 0:
            if union(base, v, n_vertices + cls[v]):
                merged += 1
    total = n_vertices + n_cls - merged
    cl = np.empty(n_atoms, dtype=np.int64)
    n_open = np.empty(n_atoms, dtype=np.int64)
    parent = base.copy()
    for mask in range(n_atoms):
        parent[:] = base
        count = total
        opened = 0
        for k in range(n_edges):
            if (mask >> k) & 1:
                opened += 1
                if union(parent, eu[k], ev[k]):
                    count -= 1
        cl[mask] = count
        n_open[mask] = opened
    return cl, n_open


@njit(cache=True, nogil=True)
def wired_without(k, u, v, bits, adj_ptr, adj_nbr, adj_edge, vis_a, vis_b, queue_a, queue_b, stamp):
    """Whether ``u`` and ``v`` are joined by open edges other than ``k`` (virtual links always open).

    Two breadth-first searches grow alternately from ``u`` and ``v``; the
    first to run dry proves separation, so the cost is bounded by the
    smaller endpoint cluster.
    """
    ha = 0
    ta = 1
    hb = 0
    tb = 1
    queue_a[0] = u
    queue_b[0] = v
    vis_a[u] = stamp
    vis_b[v] = stamp
    while ha < ta and hb < tb:
        x = queue_a[ha]
        ha += 1
        for j in range(adj_ptr[x], adj_ptr[x + 1]):
            e = adj_edge[j]
            if e == k or (e >= 0 and not bits[e]):
                continue
            y = adj_nbr[j]
            if vis_b[y] == stamp:
                return True
            if vis_a[y] != stamp:
                vis_a[y] = stamp
                queue_a[ta] = y
                ta += 1
        x = queue_b[hb]
        hb += 1
        for j in range(adj_ptr[x], adj_ptr[x + 1]):
            e = adj_edge[j]
            if e == k or (e >= 0 and not bits[e]):
                continue
            y = adj_nbr[j]
            if vis_a[y] == stamp:
                return True
            if vis_b[y] != stamp:
                vis_b[y] = stamp
                queue_b[tb] = y
                tb += 1
    return False


@njit(cache=True, nogil=True)
def heat_bath(bits, eu, ev, order, uniforms, p, q, adj_ptr, adj_nbr, adj_edge,
              vis_a, vis_b, stamp0, hist):
    """Resample ``order`` edges once per row of ``uniforms`` from their exact conditionals.

    ``hist`` (length ``2^E`` or 0) counts the state reached after every
    single-edge update, indexed by bit mask.  Returns the next free stamp.
    """
    n_nodes = adj_ptr.shape[0] - 1
    queue_a = np.empty(n_nodes, dtype=np.int64)
    queue_b = np.empty(n_nodes, dtype=np.int64)
    p_isolated = p / (p + q * (1.0 - p))
    record = hist.shape[0] > 0
    mask = 0
    if record:
        for k in range(bits.shape[0]):
            if bits[k]:
                mask |= 1 << k
    stamp = stamp0
    for s in range(uniforms.shape[0]):
        for j in range(order.shape[0]):
            k = order[j]
            if q == 1.0:
                prob = p
            else:
                stamp += 1
                if wired_without(k, eu[k], ev[k], bits, adj_ptr, adj_nbr, adj_edge,
                                 vis_a, vis_b, queue_a, queue_b, stamp):
                    prob = p
                else:
                    prob = p_isolated
            new = uniforms[s, j] < prob
            bits[k] = new
            if record:
                if new:
                    mask |= 1 << k
                else:
                    mask &= ~(1 << k)
                hist[mask] += 1
    return stamp


@njit(cache=True, nogil=True)
def crossing_subset(n1, n2, bits_h, bits_v, glabel, target):
    """Whether the open clusters of an ``n1 x n2`` grid contain a crossing cluster inside ``target``.

    ``bits_h[i, j]`` is the edge ``(i, j)-(i+1, j)``, ``bits_v[i, j]`` the
    edge ``(i, j)-(i, j+1)``; ``glabel`` are global cluster labels.
    """
    n = n1 * n2
    parent = np.arange(n)
    for i in range(n1 - 1):
        for j in range(n2):
            if bits_h[i, j]:
                union(parent, i * n2 + j, (i + 1) * n2 + j)
    for i in range(n1):
        for j in range(n2 - 1):
            if bits_v[i, j]:
                union(parent, i * n2 + j, i * n2 + j + 1)
    flags = np.zeros((n, 4), dtype=np.bool_)
    for i in range(n1):
        for j in range(n2):
            r = find(parent, i * n2 + j)
            if i == 0:
                flags[r, 0] = True
            if i == n1 - 1:
                flags[r, 1] = True
            if j == 0:
                flags[r, 2] = True
            if j == n2 - 1:
                flags[r, 3] = True
    for i in range(n1):
        for j in range(n2):
            v = i * n2 + j
            r = find(parent, v)
            if flags[r, 0] and flags[r, 1] and flags[r, 2] and flags[r, 3]:
                return glabel[i, j] == target
    return False


@njit(cache=True, nogil=True)
def all_subboxes_crossed(bits_h, bits_v, glabel, target, sides1, sides2):
    """Whether cluster ``target`` crosses every sub-box with side pair in ``sides1 x sides2``.

    Returns ``(ok, a, b, s1, s2)`` with the first failing sub-box when not ok.
    """
    w, h = glabel.shape
    for s1 in sides1:
        if s1 > w:
            continue
        for s2 in sides2:
            if s2 > h:
                continue
            for a in range(w - s1 + 1):
                for b in range(h - s2 + 1):
                    ok = crossing_subset(s1, s2, bits_h[a:a + s1 - 1, b:b + s2],
                                         bits_v[a:a + s1, b:b + s2 - 1],
                                         glabel[a:a + s1, b:b + s2], target)
                    if not ok:
                        return False, a, b, s1, s2
    return True, -1, -1, -1, -1
