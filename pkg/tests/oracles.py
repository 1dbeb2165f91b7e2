"""Brute-force reference implementations used only by the tests."""

from functools import lru_cache

import numpy as np
from scipy.sparse.csgraph import floyd_warshall

from efbqc.analytics import EncodingParams


def dense_syndrome(net, flips):
    """Syndrome as a dense GF(2) matrix-vector product."""
    H = np.zeros((net.n_cells, net.n_edges), dtype=np.int64)
    for e in range(net.n_edges):
        H[net.edge_u[e], e] += 1
        H[net.edge_v[e], e] += 1
    return (H @ np.asarray(flips, dtype=np.int64)) % 2 == 1


def block_stats_closed(m, j, eta):
    """Block probabilities summed term by term: p_full over the step at which
    B_psi first succeeds, p_fail over the number of lost pairs."""
    t2 = eta * eta
    p_full = sum(0.5 ** (i + 1) for i in range(j + 1)) * t2 ** m
    p_fail = 0.0
    for lost in range(m - j, m + 1):
        kept = m - lost
        p_fail += (0.5 * t2) ** kept * (1 - t2) ** lost
    return p_full, p_fail


def min_weight_per_class(net, erased, syndrome_bits):
    """Minimum weight of an edge set with the given syndrome, per homology class.

    Erased edges cost nothing, all others cost one.  Works on the 8-sheet
    homology cover of the syndrome graph: a shortest path from (u, 0) to
    (v, h) is the lightest u-v path whose cut crossings XOR to h.  A
    minimum T-join splits into defect-pairing paths plus closed cycles, so
    a dynamic program over pairings gives the exact optimum in each class.
    """
    n = net.n_cells
    N = 8 * n
    eps = 1e-6
    dist = np.full((N, N), np.inf)
    np.fill_diagonal(dist, 0.0)
    for e in range(net.n_edges):
        u, v, mask = int(net.edge_u[e]), int(net.edge_v[e]), int(net.edge_mask[e])
        cost = eps if erased[e] else 1.0
        for h in range(8):
            a, b = 8 * u + h, 8 * v + (h ^ mask)
            if cost < dist[a, b]:
                dist[a, b] = dist[b, a] = cost
    dist = floyd_warshall(dist, directed=False)

    cyc = np.full(8, np.inf)
    cyc[0] = 0.0
    for h in range(1, 8):
        cyc[h] = min(dist[8 * v, 8 * v + h] for v in range(n))
    changed = True
    while changed:
        changed = False
        for a in range(8):
            for b in range(8):
                if cyc[a] + cyc[b] < cyc[a ^ b] - 1e-12:
                    cyc[a ^ b] = cyc[a] + cyc[b]
                    changed = True

    defects = [int(c) for c in np.flatnonzero(syndrome_bits)]
    if len(defects) % 2:
        raise ValueError("odd number of defects")

    @lru_cache(maxsize=None)
    def best(mask_set):
        if mask_set == 0:
            return tuple(cyc)
        i = (mask_set & -mask_set).bit_length() - 1
        rest = mask_set & ~(1 << i)
        out = [np.inf] * 8
        k = rest
        while k:
            jb = k & -k
            jj = jb.bit_length() - 1
            k &= k - 1
            sub = best(rest & ~jb)
            for h1 in range(8):
                d = dist[8 * defects[i], 8 * defects[jj] + h1]
                if not np.isfinite(d):
                    continue
                for h2 in range(8):
                    val = d + sub[h2]
                    if val < out[h1 ^ h2]:
                        out[h1 ^ h2] = val
        return tuple(out)

    return np.array(best((1 << len(defects)) - 1))


def coset_decodable(net, erased, flips, *, include_erased):
    """True when the actual error's class is the unique lightest class."""
    from efbqc.lattice import syndrome

    live = flips if include_erased else flips & ~erased
    syn = syndrome(net, live)
    # erased edges carry a tiny cost, so floor() counts the unerased edges
    weights = np.floor(min_weight_per_class(net, erased, syn) + 1e-9)
    truth = int(np.bitwise_xor.reduce(net.edge_mask[live])) if live.any() else 0
    return bool(np.all(np.delete(weights, truth) > weights[truth]))


def logical_success_bruteforce(n, m, j, eta):
    """P_s from the closed-form block probabilities by summing block outcome
    tuples: both outcomes are known iff no block fails and some block is full."""
    import itertools

    pf, pfail = block_stats_closed(m, j, eta)
    ps = 1 - pf - pfail
    total = 0.0
    for combo in itertools.product((0, 1, 2), repeat=n):
        w = np.prod([(pf, ps, pfail)[c] for c in combo])
        if 2 not in combo and 0 in combo:
            total += w
    return total


def params_grid():
    out = []
    for n, m in [(1, 1), (1, 2), (2, 2), (1, 3), (2, 3), (3, 3), (4, 3), (2, 4), (3, 4), (2, 5),
                 (2, 6), (1, 6)]:
        for j in sorted({0, m - 1, min(1, m - 1)}):
            for eta in (1.0, 0.97, 0.9):
                out.append((EncodingParams(n, m, j), eta))
    return out
