"""Syndrome graphs of RHG fusion networks on a periodic L x L x L torus.

Vertices are the parity checks of the primal cells; every fusion outcome
that enters two checks is an edge between them.  Each edge carries a 3-bit
mask recording which of the three cut planes (x, y, z) it crosses, so the
homology class of any cycle is the XOR of its edge masks.

Layouts
-------
``four_star``
    Four fusions per cell face, each contributing one outcome shared by the
    two cells on either side of the face: 4 parallel edges per face, 24
    outcomes per check, ``12 L^3`` edges.
``six_ring``
    Two 6-rings per cell, sitting on the three faces and three edges around
    two body-diagonal corners.  Every face fusion gives one outcome shared
    across the face; every cell edge that is *not* covered by one of the
    cell's rings gives an outcome shared with the cell diagonally opposite
    across that edge.  Offsets: the six face neighbours plus
    ``±(1,-1,0), ±(0,1,-1), ±(1,0,-1)``: 12 outcomes per check, ``6 L^3``
    edges.
``six_ring_parallel``
    Naive per-face layout with three parallel outcomes per face (18 per
    check, ``9 L^3`` edges).  Kept for comparison with ``six_ring``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import sparse

from .analytics import SIDES, OutcomeErasureModel
from .rng import make_generator

NETWORK_KINDS = ("four_star", "six_ring", "six_ring_parallel")
CUT_NAMES = ("x", "y", "z")

_FACE_DIRS = ((1, 0, 0), (0, 1, 0), (0, 0, 1))
_RING_DIAGONALS = ((1, -1, 0), (0, 1, -1), (1, 0, -1))

# (bond name, offset, multiplicity) emitted per cell, in index order
_LAYOUTS = {
    "four_star": [(f"face_{a}", d, 4) for a, d in zip(CUT_NAMES, _FACE_DIRS)],
    "six_ring": [(f"face_{a}", d, 1) for a, d in zip(CUT_NAMES, _FACE_DIRS)]
    + [("edge_xy", _RING_DIAGONALS[0], 1), ("edge_yz", _RING_DIAGONALS[1], 1),
       ("edge_xz", _RING_DIAGONALS[2], 1)],
    "six_ring_parallel": [(f"face_{a}", d, 3) for a, d in zip(CUT_NAMES, _FACE_DIRS)],
}

CHECK_DEGREE = {kind: 2 * sum(mult for _, _, mult in layout)
                for kind, layout in _LAYOUTS.items()}


@dataclass(frozen=True)
class FusionNetwork:
    kind: str
    L: int
    cell_coords: np.ndarray   # (n_cells, 3)
    edge_u: np.ndarray        # (n_edges,) int32
    edge_v: np.ndarray
    edge_mask: np.ndarray     # (n_edges,) uint8, bit a set if the edge crosses cut a
    edge_bond: tuple[str, ...]
    edge_slot: np.ndarray     # multiplicity position, 1-based
    inc_ptr: np.ndarray       # CSR incidence cell -> edges
    inc_edge: np.ndarray

    @property
    def n_cells(self) -> int:
        return len(self.cell_coords)

    @property
    def n_edges(self) -> int:
        return len(self.edge_u)

    @property
    def logical_cuts(self) -> tuple[str, ...]:
        return CUT_NAMES

    def cell_index(self, x, y, z) -> int:
        L = self.L
        return ((x % L) * L + (y % L)) * L + (z % L)

    def incident_edges(self, cell: int) -> np.ndarray:
        return self.inc_edge[self.inc_ptr[cell]:self.inc_ptr[cell + 1]]

    def degrees(self) -> np.ndarray:
        return np.diff(self.inc_ptr)

    def check_matrix(self) -> sparse.csr_matrix:
        """Cell-by-edge incidence matrix over GF(2)."""
        rows = np.concatenate([self.edge_u, self.edge_v])
        cols = np.concatenate([np.arange(self.n_edges)] * 2)
        data = np.ones(len(rows), dtype=np.uint8)
        return sparse.csr_matrix((data, (rows, cols)), shape=(self.n_cells, self.n_edges))

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "L": self.L,
            "cells": [{"index": i, "coords": [int(c) for c in xyz]}
                      for i, xyz in enumerate(self.cell_coords)],
            "edges": [{"index": e, "cells": [int(self.edge_u[e]), int(self.edge_v[e])],
                       "bond": self.edge_bond[e], "slot": int(self.edge_slot[e]),
                       "cuts": [c for b, c in enumerate(CUT_NAMES) if self.edge_mask[e] >> b & 1]}
                      for e in range(self.n_edges)],
            "incidence": [self.incident_edges(c).tolist() for c in range(self.n_cells)],
        }


def build_network(kind: str, L: int) -> FusionNetwork:
    if kind not in _LAYOUTS:
        raise ValueError(f"unknown network kind {kind!r}; expected one of {NETWORK_KINDS}")
    if isinstance(L, bool) or not isinstance(L, (int, np.integer)) or L < 2:
        raise ValueError(f"L must be an integer >= 2, got {L!r}")
    L = int(L)
    coords = np.array([(x, y, z) for x in range(L) for y in range(L) for z in range(L)],
                      dtype=np.int64)
    us, vs, masks, bonds, slots = [], [], [], [], []
    for x, y, z in coords:
        u = (x * L + y) * L + z
        for bond, (dx, dy, dz), mult in _LAYOUTS[kind]:
            tx, ty, tz = x + dx, y + dy, z + dz
            mask = sum(1 << b for b, t in enumerate((tx, ty, tz)) if not 0 <= t < L)
            v = ((tx % L) * L + ty % L) * L + tz % L
            for slot in range(1, mult + 1):
                us.append(u)
                vs.append(v)
                masks.append(mask)
                bonds.append(bond)
                slots.append(slot)
    edge_u = np.array(us, dtype=np.int32)
    edge_v = np.array(vs, dtype=np.int32)
    n_cells = L ** 3
    ends = np.concatenate([edge_u, edge_v])
    edge_ids = np.concatenate([np.arange(len(us))] * 2).astype(np.int32)
    order = np.lexsort((edge_ids, ends))
    inc_edge = edge_ids[order]
    inc_ptr = np.zeros(n_cells + 1, dtype=np.int64)
    np.cumsum(np.bincount(ends, minlength=n_cells), out=inc_ptr[1:])
    return FusionNetwork(kind, L, coords, edge_u, edge_v, np.array(masks, dtype=np.uint8),
                         tuple(bonds), np.array(slots, dtype=np.int32), inc_ptr, inc_edge)


# -- noise -------------------------------------------------------------------

@dataclass(frozen=True)
class AgnosticNoise:
    """Every outcome erased with ``p_erasure``; survivors flipped with ``p_error``."""

    p_erasure: float
    p_error: float = 0.0

    def __post_init__(self):
        for name in ("p_erasure", "p_error"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must be a probability")


@dataclass(frozen=True)
class OpticalNoise:
    """Linear-optical erasures from an encoded-fusion erasure model.

    ``side`` chooses which fusion outcome the primal graph consumes: always
    XX, always ZZ, or either with probability 1/2 per fusion (``balanced``).
    No flips are added.
    """

    model: OutcomeErasureModel
    side: str = "balanced"

    def __post_init__(self):
        if self.side not in SIDES:
            raise ValueError(f"unknown side {self.side!r}; expected one of {SIDES}")


Noise = Union[AgnosticNoise, OpticalNoise]


@dataclass
class ErrorSample:
    erased: np.ndarray   # bool (n_edges,)
    flipped: np.ndarray  # bool (n_edges,)


def sample_error_batch(net: FusionNetwork, noise: Noise, trials: int,
                       rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Draw ``trials`` error samples as ``(erased, flipped)`` bool arrays.

    Draws come from fixed uniforms compared against the rates, so samples at
    different noise strengths with the same generator state are nested.
    """
    shape = (trials, net.n_edges)
    if isinstance(noise, AgnosticNoise):
        erased = rng.random(shape) < noise.p_erasure
        if noise.p_error > 0.0:
            flipped = (rng.random(shape) < noise.p_error) & ~erased
        else:
            flipped = np.zeros(shape, dtype=bool)
        return erased, flipped
    if isinstance(noise, OpticalNoise):
        model = noise.model
        if noise.side == "balanced":
            takes_xx = rng.random(shape) < 0.5
            rate = np.where(takes_xx, model.eps_xx, model.eps_zz)
        else:
            rate = model.erasure_for(noise.side)
        erased = rng.random(shape) < rate
        return erased, np.zeros(shape, dtype=bool)
    raise TypeError(f"unsupported noise model {noise!r}")


def sample_errors(net: FusionNetwork, noise: Noise, rng_seed=None) -> ErrorSample:
    erased, flipped = sample_error_batch(net, noise, 1, make_generator(rng_seed))
    return ErrorSample(erased[0], flipped[0])


def syndrome(net: FusionNetwork, sample: ErrorSample | np.ndarray, *,
             include_erased: bool = False) -> np.ndarray:
    """Cells whose check sees an odd number of flipped outcomes.

    By default erased outcomes carry no parity information and are skipped.
    With ``include_erased`` every flipped edge counts, which models an erased
    outcome as a uniformly random unknown value.  A bare bool array is taken
    as the flipped set with nothing erased.
    """
    if isinstance(sample, ErrorSample):
        flips = sample.flipped if include_erased else sample.flipped & ~sample.erased
    else:
        flips = np.asarray(sample, dtype=bool)
    if flips.shape != (net.n_edges,):
        raise ValueError(f"sample has shape {flips.shape}, network has {net.n_edges} edges")
    counts = (np.bincount(net.edge_u[flips], minlength=net.n_cells)
              + np.bincount(net.edge_v[flips], minlength=net.n_cells))
    return (counts & 1).astype(bool)
