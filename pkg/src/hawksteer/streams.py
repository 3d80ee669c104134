"""Seedable, splittable random number streams.

Every stochastic operation in this package takes an explicit
``numpy.random.Generator``.  The helpers here derive independent,
reproducible streams from a master seed and a tuple of key parts
(policy name, replica index, purpose tag, ...) using the counter-based
Philox bit generator, so replicas can run concurrently without
coordination and reruns are bit-identical.
"""

from __future__ import annotations

import zlib

import numpy as np


def _key_part(part) -> int:
    """Map a key part to a stable nonnegative integer."""
    if isinstance(part, (int, np.integer)):
        if part < 0:
            raise ValueError(f"stream key parts must be nonnegative, got {part}")
        return int(part)
    if isinstance(part, str):
        return zlib.crc32(part.encode("utf-8"))
    raise TypeError(f"unsupported stream key part: {part!r}")


def stream(seed: int, *parts) -> np.random.Generator:
    """Derive a named random stream from a master seed.

    Streams with different ``parts`` are statistically independent; the
    same (seed, parts) always yields the same stream.
    """
    seq = np.random.SeedSequence(entropy=int(seed),
                                 spawn_key=tuple(_key_part(p) for p in parts))
    return np.random.Generator(np.random.Philox(seq))
