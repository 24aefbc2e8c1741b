"""Seed management.

All randomness in the package flows from a single 64-bit master seed through
counter-based Philox streams keyed by a path of integers/strings, so any
(experiment, replication, stage) triple can be reproduced in isolation
without generating everything that precedes it.
"""

import zlib

import numpy as np


def _key_word(part) -> int:
    if isinstance(part, (int, np.integer)):
        if part < 0:
            raise ValueError(f"stream path parts must be non-negative, got {part}")
        return int(part)
    if isinstance(part, str):
        return zlib.crc32(part.encode("utf-8"))
    raise TypeError(f"stream path parts must be int or str, got {type(part).__name__}")


def substream(master_seed: int, *path) -> np.random.Generator:
    """Independent generator for ``(master_seed, *path)``.

    Streams with different paths are statistically independent; the same
    (seed, path) pair always yields the same stream.
    """
    key = tuple(_key_word(p) for p in path)
    seq = np.random.SeedSequence(int(master_seed), spawn_key=key)
    return np.random.Generator(np.random.Philox(seq))
