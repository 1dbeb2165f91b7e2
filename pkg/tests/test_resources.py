import pytest
from hypothesis import given
from hypothesis import strategies as st

from efbqc.resources import (BOOSTED_FBQC_2_2, EFBQC_2_2, EFBQC_7_4, ResourceCount, Scheme,
                             compare_overhead, encoded_ring_cost, encoded_star_cost,
                             ghz_chain_cost, resource_rows, to_csv, to_markdown)


@pytest.mark.parametrize("k,ghz3,fusions", [(3, 1, 0), (5, 3, 2), (8, 6, 5)])
def test_ghz_chain(k, ghz3, fusions):
    c = ghz_chain_cost(k)
    assert (c.ghz3_count, c.fusion_count, c.photons_in_state) == (ghz3, fusions, k)


def _unroll(k):
    # grow a k-GHZ one 3-GHZ at a time, tracking photons explicitly
    photons, ghz3, fusions = 3, 1, 0
    while photons < k:
        photons += 3 - 2
        ghz3 += 1
        fusions += 1
    return photons, ghz3, fusions


@given(st.integers(3, 200))
def test_chain_recursion(k):
    c = ghz_chain_cost(k)
    assert (c.photons_in_state, c.ghz3_count, c.fusion_count) == _unroll(k)
    assert c.photons_consumed() == 2 * c.fusion_count


@pytest.mark.parametrize("k", [2, 0, -1])
def test_chain_rejects_small(k):
    with pytest.raises(ValueError):
        ghz_chain_cost(k)


def test_star_examples():
    c = encoded_star_cost(2, 2)
    parts = ghz_chain_cost(8) + 8 * ghz_chain_cost(3)
    assert c.ghz3_count == parts.ghz3_count == 14
    assert c.fusion_count == parts.fusion_count + 8 == 13
    assert c.photons_in_state == 16 and c.photons_per_fusion == 8
    assert encoded_star_cost(1, 1) == ghz_chain_cost(4)
    c = encoded_star_cost(7, 4)
    assert c.ghz3_count == (28 - 2) + 28 * (5 - 2)
    assert c.fusion_count == (28 - 3) + 28 * (5 - 3) + 28
    assert c.photons_in_state == 112 and c.photons_per_fusion == 56


@given(st.integers(1, 12), st.integers(1, 8))
def test_photon_conservation(n, m):
    for c in (encoded_star_cost(n, m), encoded_ring_cost(n, m)):
        assert 3 * c.ghz3_count - 2 * c.fusion_count == c.photons_in_state
        assert c.photons_per_fusion == 2 * n * m
    assert encoded_star_cost(n, m).photons_in_state == 4 * n * m
    assert encoded_ring_cost(n, m).photons_in_state == 6 * n * m


def test_comparison():
    rep = compare_overhead(EFBQC_2_2, BOOSTED_FBQC_2_2)
    ppf = [r["photons_per_fusion"] for r in rep["rows"]]
    assert ppf == [8, 16]
    assert [r["threshold"] for r in rep["rows"]] == [0.048, 0.027]
    assert rep["verdict"] == EFBQC_2_2.name
    assert compare_overhead(EFBQC_2_2, EFBQC_2_2)["verdict"] == "tie"
    assert EFBQC_7_4.photons_per_fusion == 56
    cheap_bad = Scheme("a", 1, 1, 0.01)
    assert compare_overhead(cheap_bad, EFBQC_7_4)["verdict"] == "incomparable"


def test_expected_fusions():
    c = encoded_star_cost(2, 2)
    assert c.expected_fusions() == 13
    assert c.expected_fusions(0.5) == 26
    with pytest.raises(ValueError):
        c.expected_fusions(0.0)
    with pytest.raises(ValueError):
        ResourceCount(-1, 0, 0)


def test_tables():
    rows = resource_rows("four_star", [(1, 1), (2, 2)])
    csv_text = to_csv(rows)
    assert csv_text.splitlines()[0].startswith("kind,n,m,photons_in_state")
    md = to_markdown(rows)
    assert md.count("\n") == 4 and md.startswith("| kind")
