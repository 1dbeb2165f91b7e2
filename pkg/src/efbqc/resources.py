"""Deterministic resource counts for encoded resource states.

Every state is grown from 3-GHZ states by type-II fusions, each of which
consumes two photons.  Fusing an a-GHZ state with a 3-GHZ state gives an
(a+1)-GHZ state, so a k-GHZ chain costs k-2 three-photon states and k-3
fusions.  Generation-stage fusion failures are not counted unless a
success probability is passed to :meth:`ResourceCount.expected_fusions`.
"""

from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass

from .analytics import EncodingParams

PHOTONS_PER_FUSION_OP = 2


@dataclass(frozen=True)
class ResourceCount:
    photons_in_state: int
    ghz3_count: int
    fusion_count: int
    photons_per_fusion: int = 2

    def __post_init__(self):
        for name, value in asdict(self).items():
            if value < 0:
                raise ValueError(f"{name} must be non-negative, got {value}")

    def __add__(self, other: "ResourceCount") -> "ResourceCount":
        return ResourceCount(self.photons_in_state + other.photons_in_state,
                             self.ghz3_count + other.ghz3_count,
                             self.fusion_count + other.fusion_count,
                             self.photons_per_fusion)

    def __mul__(self, k: int) -> "ResourceCount":
        return ResourceCount(k * self.photons_in_state, k * self.ghz3_count,
                             k * self.fusion_count, self.photons_per_fusion)

    __rmul__ = __mul__

    def fused(self, joins: int) -> "ResourceCount":
        """Account for ``joins`` extra fusions between parts already counted."""
        return ResourceCount(self.photons_in_state - PHOTONS_PER_FUSION_OP * joins,
                             self.ghz3_count, self.fusion_count + joins,
                             self.photons_per_fusion)

    def expected_fusions(self, p_success: float = 1.0) -> float:
        """Expected fusion attempts when each succeeds with ``p_success``."""
        if not 0.0 < p_success <= 1.0:
            raise ValueError("p_success must lie in (0, 1]")
        return self.fusion_count / p_success

    def photons_consumed(self) -> int:
        return 3 * self.ghz3_count - self.photons_in_state


def ghz_chain_cost(k: int) -> ResourceCount:
    if isinstance(k, bool) or not isinstance(k, int):
        raise TypeError(f"k must be an integer, got {k!r}")
    if k < 3:
        raise ValueError(f"a GHZ chain needs k >= 3, got {k}")
    return ResourceCount(photons_in_state=k, ghz3_count=k - 2, fusion_count=k - 3)


def _with_ppf(count: ResourceCount, n: int, m: int) -> ResourceCount:
    return ResourceCount(count.photons_in_state, count.ghz3_count, count.fusion_count,
                         EncodingParams(n, m, 0).photons_per_fusion)


def encoded_star_cost(n: int, m: int) -> ResourceCount:
    """Encoded 4-star: a 4n-GHZ hub with an (m+1)-GHZ leaf fused to each arm.

    For m = 1 the arms are bare photons and the state is the 4n-GHZ itself.
    """
    EncodingParams(n, m, 0)
    hub = ghz_chain_cost(4 * n)
    if m == 1:
        return _with_ppf(hub, n, m)
    total = (hub + 4 * n * ghz_chain_cost(m + 1)).fused(4 * n)
    return _with_ppf(total, n, m)


def encoded_ring_cost(n: int, m: int) -> ResourceCount:
    """Encoded 6-ring, extrapolated from the (2,2) construction.

    Each of the six ring sites is an (n+2)-GHZ: n arms carrying the
    encoded blocks plus two ring bonds.  Arms get an (m+1)-GHZ leaf as in
    the 4-star, and six fusions close the ring.
    """
    EncodingParams(n, m, 0)
    site = ghz_chain_cost(n + 2)
    if m > 1:
        site = (site + n * ghz_chain_cost(m + 1)).fused(n)
    return _with_ppf((6 * site).fused(6), n, m)


def state_cost(kind: str, n: int, m: int) -> ResourceCount:
    if kind == "four_star":
        return encoded_star_cost(n, m)
    if kind in ("six_ring", "six_ring_parallel"):
        return encoded_ring_cost(n, m)
    raise ValueError(f"unknown resource-state kind {kind!r}")


@dataclass(frozen=True)
class Scheme:
    """A fusion scheme for overhead comparisons."""

    name: str
    n: int
    m: int
    threshold: float
    ancilla_per_fusion: int = 0
    kind: str = "six_ring"

    @property
    def photons_per_fusion(self) -> int:
        return 2 * self.n * self.m + self.ancilla_per_fusion

    @property
    def photons_per_state(self) -> int:
        return state_cost(self.kind, self.n, self.m).photons_in_state


EFBQC_2_2 = Scheme("EFBQC(2,2)", 2, 2, 0.048)
BOOSTED_FBQC_2_2 = Scheme("boosted-FBQC(2,2)", 2, 2, 0.027, ancilla_per_fusion=2 * 2 * 2)
EFBQC_7_4 = Scheme("EFBQC(7,4)", 7, 4, 0.1397)


def compare_overhead(a: Scheme, b: Scheme) -> dict:
    """Photon cost versus threshold for two schemes.

    ``verdict`` names the dominating scheme (no more photons per fusion and
    no lower threshold, strictly better in one), ``"tie"`` when both match,
    and ``"incomparable"`` otherwise.
    """
    rows = [{"scheme": s.name, "n": s.n, "m": s.m, "kind": s.kind,
             "photons_per_fusion": s.photons_per_fusion,
             "photons_per_state": s.photons_per_state, "threshold": s.threshold}
            for s in (a, b)]
    key_a = (a.photons_per_fusion, a.threshold)
    key_b = (b.photons_per_fusion, b.threshold)
    if key_a == key_b:
        verdict = "tie"
    elif a.photons_per_fusion <= b.photons_per_fusion and a.threshold >= b.threshold:
        verdict = a.name
    elif b.photons_per_fusion <= a.photons_per_fusion and b.threshold >= a.threshold:
        verdict = b.name
    else:
        verdict = "incomparable"
    return {"rows": rows, "verdict": verdict}


RESOURCE_COLUMNS = ("kind", "n", "m", "photons_in_state", "ghz3_count", "fusion_count",
                    "photons_per_fusion")


def resource_rows(kind: str, pairs) -> list[dict]:
    rows = []
    for n, m in pairs:
        c = state_cost(kind, n, m)
        rows.append({"kind": kind, "n": n, "m": m, **asdict(c)})
    return rows


def to_csv(rows: list[dict], columns=None) -> str:
    columns = list(columns or rows[0].keys())
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def to_markdown(rows: list[dict], columns=None) -> str:
    columns = list(columns or rows[0].keys())
    lines = ["| " + " | ".join(columns) + " |", "|" + "---|" * len(columns)]
    lines += ["| " + " | ".join(str(r[c]) for c in columns) + " |" for r in rows]
    return "\n".join(lines) + "\n"
