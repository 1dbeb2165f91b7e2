"""Erasure-first union-find decoding on a fusion-network syndrome graph.

The decoder works in three stages on per-trial scratch buffers:

1. Erased edges are merged into clusters.  Union-find keeps, for every
   vertex, the homology mask of its tree path to the cluster root, so an
   erased edge that closes a homologically nontrivial loop is spotted on the
   spot.  Such an erasure is undecodable and the trial is a logical failure.
2. Clusters with odd defect parity grow by half edges until every cluster
   is even (Delfosse-Nickerson growth).
3. A spanning forest of each cluster's grown edges is peeled from the
   leaves, giving a correction whose boundary is exactly the syndrome.

The heavy lifting is compiled with numba; the kernels release the GIL so a
thread pool can decode independent trials concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .lattice import ErrorSample, FusionNetwork, syndrome


@njit(cache=True, nogil=True)
def _find(parent, pot, stack, x):
    n = 0
    while parent[x] != x:
        stack[n] = x
        n += 1
        x = parent[x]
    root = x
    acc = 0
    for i in range(n - 1, -1, -1):
        node = stack[i]
        acc ^= pot[node]
        pot[node] = acc
        parent[node] = root
    return root


@njit(cache=True, nogil=True)
def _union(parent, pot, size, parity, stack, u, v, mask):
    """Merge the clusters of u and v across an edge with homology ``mask``.

    Returns the homology of the closed loop when u and v were already
    connected (0 for a trivial loop), and -1 after a genuine merge.
    """
    ru = _find(parent, pot, stack, u)
    pu = pot[u] if u != ru else 0
    rv = _find(parent, pot, stack, v)
    pv = pot[v] if v != rv else 0
    if ru == rv:
        return pu ^ pv ^ mask
    if size[ru] < size[rv]:
        ru, rv = rv, ru
    parent[rv] = ru
    pot[rv] = pu ^ pv ^ mask
    size[ru] += size[rv]
    parity[ru] ^= parity[rv]
    return -1


@njit(cache=True, nogil=True)
def _decode_one(n_cells, eu, ev, emask, inc_ptr, inc_edge, root_order,
                erased, defects, correction, stats):
    """Decode one trial in place.

    ``defects`` is consumed; ``correction`` receives the result.  ``stats``
    gets [wrapped, clusters, peel_steps, growth_rounds, leftover_defects].
    """
    n_edges = eu.shape[0]
    parent = np.arange(n_cells)
    pot = np.zeros(n_cells, dtype=np.int64)
    size = np.ones(n_cells, dtype=np.int64)
    parity = defects.astype(np.int64)
    stack = np.empty(n_cells, dtype=np.int64)
    grown = np.zeros(n_edges, dtype=np.bool_)
    support = np.zeros(n_edges, dtype=np.int8)

    wrapped = 0
    for e in range(n_edges):
        if erased[e]:
            grown[e] = True
            support[e] = 2
            loop = _union(parent, pot, size, parity, stack, eu[e], ev[e], emask[e])
            if loop > 0:
                wrapped = 1

    rounds = 0
    delta = np.zeros(n_edges, dtype=np.int8)
    newly = np.empty(n_edges, dtype=np.int64)
    while True:
        any_odd = False
        for e in range(n_edges):
            delta[e] = 0
            if support[e] >= 2:
                continue
            ru = _find(parent, pot, stack, eu[e])
            rv = _find(parent, pot, stack, ev[e])
            d = parity[ru] + parity[rv] if ru != rv else 2 * parity[ru]
            if d > 0:
                delta[e] = d
                any_odd = True
        if not any_odd:
            break
        rounds += 1
        k = 0
        for e in range(n_edges):
            if delta[e] > 0:
                support[e] = min(2, support[e] + delta[e])
                if support[e] >= 2:
                    grown[e] = True
                    newly[k] = e
                    k += 1
        for i in range(k):
            e = newly[i]
            _union(parent, pot, size, parity, stack, eu[e], ev[e], emask[e])
        if rounds > n_edges:
            break

    # spanning forest over grown edges, then peel leaves towards the roots
    visited = np.zeros(n_cells, dtype=np.bool_)
    parent_edge = np.full(n_cells, -1, dtype=np.int64)
    order = np.empty(n_cells, dtype=np.int64)
    n_order = 0
    clusters = 0
    for r in range(n_cells):
        start = root_order[r]
        if visited[start]:
            continue
        visited[start] = True
        head = n_order
        tree_start = n_order
        order[n_order] = start
        n_order += 1
        while head < n_order:
            x = order[head]
            head += 1
            for p in range(inc_ptr[x], inc_ptr[x + 1]):
                e = inc_edge[p]
                if not grown[e]:
                    continue
                y = ev[e] if eu[e] == x else eu[e]
                if not visited[y]:
                    visited[y] = True
                    parent_edge[y] = e
                    order[n_order] = y
                    n_order += 1
        if n_order - tree_start > 1 or defects[start]:
            clusters += 1

    peel = 0
    for i in range(n_order - 1, -1, -1):
        x = order[i]
        e = parent_edge[x]
        if e < 0 or not defects[x]:
            continue
        y = ev[e] if eu[e] == x else eu[e]
        correction[e] ^= True
        defects[x] = False
        defects[y] = not defects[y]
        peel += 1

    leftover = 0
    for c in range(n_cells):
        if defects[c]:
            leftover += 1
    stats[0] = wrapped
    stats[1] = clusters
    stats[2] = peel
    stats[3] = rounds
    stats[4] = leftover


@njit(cache=True, nogil=True)
def _decode_batch(n_cells, eu, ev, emask, inc_ptr, inc_edge, erased, flipped,
                  include_erased, failed, stats_out):
    trials, n_edges = erased.shape
    root_order = np.arange(n_cells)
    defects = np.zeros(n_cells, dtype=np.bool_)
    correction = np.zeros(n_edges, dtype=np.bool_)
    stats = np.zeros(5, dtype=np.int64)
    for t in range(trials):
        defects[:] = False
        has_flip = False
        for e in range(n_edges):
            if flipped[t, e] and (include_erased or not erased[t, e]):
                defects[eu[e]] = not defects[eu[e]]
                defects[ev[e]] = not defects[ev[e]]
                has_flip = True
        correction[:] = False
        if has_flip or include_erased:
            _decode_one(n_cells, eu, ev, emask, inc_ptr, inc_edge, root_order,
                        erased[t], defects, correction, stats)
        else:
            stats[:] = 0
            stats[0] = _erasure_wraps(n_cells, eu, ev, emask, erased[t])
        hom = 0
        for e in range(n_edges):
            live = flipped[t, e] and (include_erased or not erased[t, e])
            if live != correction[e]:
                hom ^= emask[e]
        failed[t] = stats[0] != 0 or hom != 0 or stats[4] != 0
        for i in range(5):
            stats_out[t, i] = stats[i]


@njit(cache=True, nogil=True)
def _erasure_wraps(n_cells, eu, ev, emask, erased):
    parent = np.arange(n_cells)
    pot = np.zeros(n_cells, dtype=np.int64)
    size = np.ones(n_cells, dtype=np.int64)
    parity = np.zeros(n_cells, dtype=np.int64)
    stack = np.empty(n_cells, dtype=np.int64)
    for e in range(eu.shape[0]):
        if erased[e]:
            if _union(parent, pot, size, parity, stack, eu[e], ev[e], emask[e]) > 0:
                return 1
    return 0


@dataclass
class DecodeResult:
    success: bool
    correction: np.ndarray
    wrapped: bool
    residual_homology: int
    stats: dict = field(default_factory=dict)


def _net_arrays(net):
    return (net.n_cells, net.edge_u.astype(np.int64), net.edge_v.astype(np.int64),
            net.edge_mask.astype(np.int64), net.inc_ptr, net.inc_edge.astype(np.int64))


def decode(net: FusionNetwork, sample: ErrorSample, rng_seed=None, *,
           include_erased: bool = False) -> DecodeResult:
    """Decode one error sample.

    ``rng_seed`` switches on a randomised tie-break: clusters are then
    rooted (and peeled) in a random cell order instead of index order.
    """
    n_cells, eu, ev, emask, inc_ptr, inc_edge = _net_arrays(net)
    erased = np.ascontiguousarray(sample.erased, dtype=np.bool_)
    if erased.shape != (net.n_edges,) or sample.flipped.shape != (net.n_edges,):
        raise ValueError("sample is not dimensioned for this network")
    defects = syndrome(net, sample, include_erased=include_erased).copy()
    if rng_seed is None:
        root_order = np.arange(n_cells)
    else:
        root_order = np.random.default_rng(rng_seed).permutation(n_cells)
    correction = np.zeros(net.n_edges, dtype=np.bool_)
    stats = np.zeros(5, dtype=np.int64)
    _decode_one(n_cells, eu, ev, emask, inc_ptr, inc_edge, root_order,
                erased, defects, correction, stats)
    live = sample.flipped if include_erased else sample.flipped & ~sample.erased
    residual = live ^ correction
    hom = int(np.bitwise_xor.reduce(net.edge_mask[residual])) if residual.any() else 0
    if stats[4]:
        raise RuntimeError("peeling left unmatched defects; syndrome parity is inconsistent")
    wrapped = bool(stats[0])
    return DecodeResult(
        success=not wrapped and hom == 0,
        correction=correction,
        wrapped=wrapped,
        residual_homology=hom,
        stats={"clusters": int(stats[1]), "peeling_steps": int(stats[2]),
               "growth_rounds": int(stats[3])},
    )


def decode_batch(net: FusionNetwork, erased: np.ndarray, flipped: np.ndarray, *,
                 include_erased: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Decode many samples; returns (failed bool array, per-trial stats).

    Stats columns: wrapped, clusters, peeling steps, growth rounds, leftover
    defects.
    """
    n_cells, eu, ev, emask, inc_ptr, inc_edge = _net_arrays(net)
    erased = np.ascontiguousarray(erased, dtype=np.bool_)
    flipped = np.ascontiguousarray(flipped, dtype=np.bool_)
    failed = np.zeros(len(erased), dtype=np.bool_)
    stats = np.zeros((len(erased), 5), dtype=np.int64)
    _decode_batch(n_cells, eu, ev, emask, inc_ptr, inc_edge, erased, flipped,
                  include_erased, failed, stats)
    return failed, stats


def logical_check(net: FusionNetwork, residual: np.ndarray) -> bool:
    """True when a closed residual is homologically trivial on every cut."""
    residual = np.asarray(residual, dtype=bool)
    if syndrome(net, residual).any():
        raise ValueError("residual has a nonzero syndrome; it is not a closed cycle")
    if not residual.any():
        return True
    return int(np.bitwise_xor.reduce(net.edge_mask[residual])) == 0


def trace(net: FusionNetwork, sample: ErrorSample, result: DecodeResult) -> dict:
    """JSON-ready dump of one decoding, for debugging."""
    return {
        "kind": net.kind,
        "L": net.L,
        "erased": np.flatnonzero(sample.erased).tolist(),
        "flipped": np.flatnonzero(sample.flipped).tolist(),
        "syndrome": np.flatnonzero(syndrome(net, sample)).tolist(),
        "correction": np.flatnonzero(result.correction).tolist(),
        "success": result.success,
        "wrapped": result.wrapped,
        "residual_homology": result.residual_homology,
        "stats": result.stats,
    }
