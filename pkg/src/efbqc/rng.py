"""Seeding helpers.

Randomness is counter based: every stream is addressed by a master seed, a
stream name and a chunk index, so a run can be reproduced (or split across
workers) without carrying generator state around.
"""

from __future__ import annotations

import zlib

import numpy as np


def stream_key(name: str) -> int:
    return zlib.crc32(name.encode("utf-8"))


def chunk_generator(seed: int, stream: str, chunk: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(stream_key(stream), int(chunk)))
    return np.random.default_rng(ss)


def make_generator(seed=None) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
