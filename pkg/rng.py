"""Replayable random streams.

Every stochastic operation draws from a Philox generator keyed by the run seed
plus a small tuple of integers naming the purpose, so two calls with the same
(seed, stream) produce identical draws regardless of call order or worker.
"""
import zlib

import numpy as np

# Purpose tags keep independent streams apart for the same user seed.
STREAM_TAGS = {
    "random_trig": 1,
    "maurey": 2,
    "erm": 3,
    "sample": 4,
    "population": 5,
    "quadrature": 6,
    "probe": 7,
    "covering": 8,
    "suite": 9,
}


def stream_tag(name):
    """Map a purpose name to a stable integer."""
    if name in STREAM_TAGS:
        return STREAM_TAGS[name]
    return zlib.crc32(name.encode("utf-8"))


def make_rng(seed, *stream):
    """Return a counter-based generator for ``seed`` and the given stream path.

    Stream elements may be integers or purpose names.
    """
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    words = [int(seed)]
    for part in stream:
        words.append(stream_tag(part) if isinstance(part, str) else int(part))
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(words)))
