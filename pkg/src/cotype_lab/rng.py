"""Seeded, order-independent random substreams.

Every stochastic routine draws from ``substream(seed, *key)``; the key names
the consumer (restart index, ensemble member, ...) so results never depend on
evaluation order or thread count.
"""
from __future__ import annotations

import zlib

import numpy as np


def _key_part(part) -> int:
    if isinstance(part, (int, np.integer)):
        return int(part) & 0xFFFFFFFF
    return zlib.crc32(str(part).encode())


def substream(seed: int, *key) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1),
                                spawn_key=tuple(_key_part(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed: int, *key) -> int:
    ss = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1),
                                spawn_key=tuple(_key_part(k) for k in key))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))
