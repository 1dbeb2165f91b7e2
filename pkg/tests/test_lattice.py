import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from efbqc.analytics import EncodingParams, erasure_model
from efbqc.lattice import (CHECK_DEGREE, NETWORK_KINDS, AgnosticNoise, ErrorSample, OpticalNoise,
                           build_network, sample_error_batch, sample_errors, syndrome)

from oracles import dense_syndrome

EDGES_PER_CELL = {"four_star": 12, "six_ring": 6, "six_ring_parallel": 9}


def test_four_star_counts():
    net = build_network("four_star", 2)
    assert (net.n_cells, net.n_edges) == (8, 96)
    assert set(net.degrees()) == {24}


def test_six_ring_counts():
    net = build_network("six_ring", 2)
    assert (net.n_cells, net.n_edges) == (8, 48)
    assert set(net.degrees()) == {12}
    assert build_network("six_ring", 4).n_edges == 384


def test_parallel_six_ring_layout():
    net = build_network("six_ring_parallel", 2)
    assert (net.n_cells, net.n_edges) == (8, 72)
    assert set(net.degrees()) == {18}
    assert build_network("six_ring_parallel", 4).n_edges == 576


@pytest.mark.parametrize("kind", NETWORK_KINDS)
@pytest.mark.parametrize("L", range(2, 11))
def test_counts_and_handshake(kind, L):
    net = build_network(kind, L)
    assert net.n_edges == EDGES_PER_CELL[kind] * L ** 3
    assert np.all(net.degrees() == CHECK_DEGREE[kind])
    assert np.all(net.edge_u != net.edge_v)
    H = net.check_matrix()
    assert np.all(np.asarray(H.sum(axis=0)).ravel() == 2)
    # the product of all checks is the identity
    assert np.all(np.asarray(H.sum(axis=0)).ravel() % 2 == 0)


@pytest.mark.parametrize("kind", NETWORK_KINDS)
def test_edges_join_lattice_neighbours(kind):
    L = 5
    net = build_network(kind, L)
    d = (net.cell_coords[net.edge_v] - net.cell_coords[net.edge_u]) % L
    d = np.where(d > L // 2, d - L, d)
    allowed = {(1, 0, 0), (0, 1, 0), (0, 0, 1), (1, -1, 0), (0, 1, -1), (1, 0, -1)}
    assert {tuple(int(c) for c in r) for r in d} <= allowed
    # masks flag exactly the wraps
    raw = net.cell_coords[net.edge_u] + d
    wraps = ((raw < 0) | (raw >= L)).astype(int)
    expect = wraps[:, 0] | wraps[:, 1] << 1 | wraps[:, 2] << 2
    assert np.array_equal(expect, net.edge_mask)


def test_deterministic_indexing():
    a, b = build_network("four_star", 3), build_network("four_star", 3)
    assert np.array_equal(a.edge_u, b.edge_u) and np.array_equal(a.edge_v, b.edge_v)
    assert a.edge_bond[:4] == ("face_x",) * 4 and list(a.edge_slot[:4]) == [1, 2, 3, 4]
    assert a.cell_index(1, 2, 0) == (1 * 3 + 2) * 3 + 0


@pytest.mark.parametrize("L", [1, 0, -2, 2.5, True])
def test_rejects_small_or_bad_L(L):
    with pytest.raises(ValueError):
        build_network("six_ring", L)


def test_rejects_unknown_kind():
    with pytest.raises(ValueError):
        build_network("eight_ring", 3)


def test_trivial_samples():
    net = build_network("six_ring", 3)
    s = sample_errors(net, AgnosticNoise(0.0, 0.0), 1)
    assert not s.erased.any() and not s.flipped.any()
    assert not syndrome(net, s).any()
    s = sample_errors(net, AgnosticNoise(1.0, 0.0), 1)
    assert s.erased.all()


def test_single_flip_flags_endpoints():
    net = build_network("four_star", 3)
    for e in (0, 17, net.n_edges - 1):
        flips = np.zeros(net.n_edges, bool)
        flips[e] = True
        assert set(np.flatnonzero(syndrome(net, flips))) == {net.edge_u[e], net.edge_v[e]}


@pytest.mark.parametrize("kind", NETWORK_KINDS)
def test_syndrome_matches_dense_oracle(kind):
    net = build_network(kind, 2)
    rng = np.random.default_rng(0)
    for _ in range(50):
        s = sample_errors(net, AgnosticNoise(0.2, 0.3), rng)
        live = s.flipped & ~s.erased
        assert np.array_equal(syndrome(net, s), dense_syndrome(net, live))
        assert np.array_equal(syndrome(net, s, include_erased=True),
                              dense_syndrome(net, s.flipped))


@given(st.sampled_from(NETWORK_KINDS), st.integers(0, 2**31), st.floats(0, 1))
@settings(max_examples=50, deadline=None)
def test_syndrome_linear(kind, seed, p):
    net = build_network(kind, 3)
    rng = np.random.default_rng(seed)
    a = rng.random(net.n_edges) < p
    b = rng.random(net.n_edges) < p
    assert np.array_equal(syndrome(net, a ^ b), syndrome(net, a) ^ syndrome(net, b))


def test_optical_erasure_rate():
    # 0.0625 letter erasure for the lossless (2,2,1) fusion
    net = build_network("six_ring", 6)
    model = erasure_model(EncodingParams(2, 2, 1), 1.0)
    e, f = sample_error_batch(net, OpticalNoise(model, "primal_zz"), 80, np.random.default_rng(1))
    n = e.size
    assert n >= 10**5
    se = np.sqrt(0.0625 * 0.9375 / n)
    assert abs(e.mean() - 0.0625) < 3 * se
    assert not f.any()
    e, _ = sample_error_batch(net, OpticalNoise(model, "primal_xx"), 10, np.random.default_rng(1))
    assert not e.any()


def test_balanced_side_rate():
    net = build_network("four_star", 4)
    model = erasure_model(EncodingParams(2, 2, 1), 0.97)
    e, _ = sample_error_batch(net, OpticalNoise(model), 200, np.random.default_rng(2))
    se = np.sqrt(model.eps_balanced * (1 - model.eps_balanced) / e.size)
    assert abs(e.mean() - model.eps_balanced) < 4 * se


def test_flips_only_on_survivors():
    net = build_network("four_star", 3)
    e, f = sample_error_batch(net, AgnosticNoise(0.5, 0.5), 20, np.random.default_rng(0))
    assert not (e & f).any()


def test_noise_validation():
    with pytest.raises(ValueError):
        AgnosticNoise(1.5)
    with pytest.raises(ValueError):
        OpticalNoise(erasure_model(EncodingParams(1, 1, 0), 1.0), "sideways")
    net = build_network("six_ring", 2)
    with pytest.raises(ValueError):
        syndrome(net, np.zeros(5, bool))


def test_json_export_roundtrip():
    net = build_network("six_ring", 2)
    doc = json.loads(json.dumps(net.to_json()))
    assert len(doc["cells"]) == 8 and len(doc["edges"]) == 48
    for c, inc in enumerate(doc["incidence"]):
        assert all(c in doc["edges"][e]["cells"] for e in inc)
