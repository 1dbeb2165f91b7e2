import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from efbqc.decoder import decode, decode_batch, logical_check, trace
from efbqc.lattice import (NETWORK_KINDS, AgnosticNoise, ErrorSample, build_network,
                           sample_error_batch, sample_errors, syndrome)

from oracles import coset_decodable


def _empty(net):
    return ErrorSample(np.zeros(net.n_edges, bool), np.zeros(net.n_edges, bool))


@pytest.mark.parametrize("kind", NETWORK_KINDS)
def test_empty_sample(kind):
    net = build_network(kind, 3)
    r = decode(net, _empty(net))
    assert r.success and not r.correction.any()


@pytest.mark.parametrize("kind", NETWORK_KINDS)
def test_every_single_flip_corrected(kind):
    net = build_network(kind, 3)
    for e in range(net.n_edges):
        s = _empty(net)
        s.flipped[e] = True
        r = decode(net, s)
        assert r.success
        assert logical_check(net, r.correction ^ s.flipped)


@given(st.sampled_from(NETWORK_KINDS), st.integers(0, 2**31), st.floats(0, 0.3),
       st.floats(0, 0.1), st.booleans())
@settings(max_examples=60, deadline=None)
def test_correction_reproduces_syndrome(kind, seed, pe, px, include_erased):
    net = build_network(kind, 4)
    s = sample_errors(net, AgnosticNoise(pe, px), seed)
    if include_erased:
        s.flipped |= s.erased & (np.random.default_rng(seed).random(net.n_edges) < 0.5)
    r = decode(net, s, include_erased=include_erased)
    assert np.array_equal(syndrome(net, r.correction),
                          syndrome(net, s, include_erased=include_erased))
    if include_erased:
        # peeling stays inside the erasure when there are no other flips
        if not (s.flipped & ~s.erased).any():
            assert not (r.correction & ~s.erased).any()


def test_deterministic_and_seeded_variant():
    net = build_network("six_ring", 5)
    s = sample_errors(net, AgnosticNoise(0.1, 0.02), 7)
    a, b = decode(net, s), decode(net, s)
    assert np.array_equal(a.correction, b.correction) and a.stats == b.stats
    c, d = decode(net, s, rng_seed=3), decode(net, s, rng_seed=3)
    assert np.array_equal(c.correction, d.correction)
    assert np.array_equal(syndrome(net, c.correction), syndrome(net, s))


def test_batch_matches_single():
    net = build_network("four_star", 3)
    e, f = sample_error_batch(net, AgnosticNoise(0.05, 0.01), 300, np.random.default_rng(9))
    failed, stats = decode_batch(net, e, f)
    for t in range(300):
        r = decode(net, ErrorSample(e[t], f[t]))
        assert failed[t] == (not r.success)


def test_wrapped_erasure_is_failure():
    net = build_network("six_ring", 3)
    s = _empty(net)
    # a full line of x-face outcomes around the torus
    for x in range(3):
        cell = net.cell_index(x, 0, 0)
        e = next(e for e in net.incident_edges(cell)
                 if net.edge_u[e] == cell and net.edge_bond[e] == "face_x")
        s.erased[e] = True
    r = decode(net, s)
    assert r.wrapped and not r.success


def test_logical_check_examples():
    net = build_network("four_star", 3)
    assert logical_check(net, np.zeros(net.n_edges, bool))
    loop = np.zeros(net.n_edges, bool)
    for x in range(3):
        cell = net.cell_index(x, 1, 2)
        e = next(e for e in net.incident_edges(cell)
                 if net.edge_u[e] == cell and net.edge_bond[e] == "face_x")
        loop[e] = True
    assert not logical_check(net, loop)
    bad = np.zeros(net.n_edges, bool)
    bad[0] = True
    with pytest.raises(ValueError):
        logical_check(net, bad)


def _edge(net, cell_xyz, bond, slot=1):
    c = net.cell_index(*cell_xyz)
    for e in net.incident_edges(c):
        if net.edge_u[e] == c and net.edge_bond[e] == bond and net.edge_slot[e] == slot:
            return e
    raise KeyError((cell_xyz, bond, slot))


def _plaquettes(net, rng, count):
    """Random contractible cycles built from lattice geometry alone."""
    axes = {"x": (1, 0, 0), "y": (0, 1, 0), "z": (0, 0, 1)}
    slots = int(net.edge_slot.max())
    out = []
    for _ in range(count):
        x = tuple(int(v) for v in rng.integers(0, net.L, 3))
        shift = lambda p, d: tuple(a + b for a, b in zip(p, d))
        choice = rng.integers(3)
        loop = np.zeros(net.n_edges, bool)
        if choice == 0:
            a, b = rng.choice(list(axes), 2, replace=False)
            for cell, bond in ((x, a), (shift(x, axes[a]), b), (shift(x, axes[b]), a), (x, b)):
                loop[_edge(net, cell, f"face_{bond}")] ^= True
        elif choice == 1 and slots > 1:
            a = rng.choice(list(axes))
            s1, s2 = rng.choice(np.arange(1, slots + 1), 2, replace=False)
            loop[_edge(net, x, f"face_{a}", int(s1))] ^= True
            loop[_edge(net, x, f"face_{a}", int(s2))] ^= True
        elif "edge_xy" in net.edge_bond:
            # ring diagonals close triangles with two face bonds
            bond, first, back, off = [("edge_xy", "x", "y", (1, -1, 0)),
                                      ("edge_yz", "y", "z", (0, 1, -1)),
                                      ("edge_xz", "x", "z", (1, 0, -1))][rng.integers(3)]
            loop[_edge(net, x, bond)] ^= True
            loop[_edge(net, x, f"face_{first}")] ^= True
            loop[_edge(net, shift(x, off), f"face_{back}")] ^= True
        out.append(loop)
    return out


@given(st.sampled_from(NETWORK_KINDS), st.integers(0, 2**31))
@settings(max_examples=50, deadline=None)
def test_random_stabilizers_are_trivial(kind, seed):
    net = build_network(kind, 3)
    rng = np.random.default_rng(seed)
    residual = np.zeros(net.n_edges, bool)
    for loop in _plaquettes(net, rng, int(rng.integers(1, 12))):
        assert not syndrome(net, loop).any()
        residual ^= loop
    assert logical_check(net, residual)


def test_trace_is_json():
    net = build_network("six_ring", 2)
    s = sample_errors(net, AgnosticNoise(0.1, 0.05), 0)
    doc = json.loads(json.dumps(trace(net, s, decode(net, s))))
    assert doc["kind"] == "six_ring" and "correction" in doc


def test_shape_check():
    net = build_network("six_ring", 2)
    with pytest.raises(ValueError):
        decode(net, ErrorSample(np.zeros(3, bool), np.zeros(3, bool)))


@pytest.mark.parametrize("kind", ["four_star", "six_ring"])
def test_mixed_noise_agrees_with_coset_oracle_mostly(kind):
    # union-find is not maximum likelihood, so only most low-weight
    # samples must agree once flips sit outside the erasure
    net = build_network(kind, 3)
    rng = np.random.default_rng(11)
    agree = n = 0
    while n < 200:
        er = rng.random(net.n_edges) < 0.04
        fl = (rng.random(net.n_edges) < 0.015) & ~er
        if not fl.any() or (er | fl).sum() > 6:
            continue
        n += 1
        ok = decode(net, ErrorSample(er, fl)).success
        agree += ok == coset_decodable(net, er, fl, include_erased=False)
    assert agree / n >= 0.8


def test_sub_threshold_scaling_six_ring():
    rates = []
    for L in (4, 6, 8):
        net = build_network("six_ring", L)
        e, f = sample_error_batch(net, AgnosticNoise(0.08), 10_000, np.random.default_rng(L))
        rates.append(decode_batch(net, e, f)[0].mean())
    assert rates[0] > rates[1] > rates[2]
