"""Deterministic, platform-independent random streams.

Streams are Philox counter-based generators keyed by (seed, stream ids),
so generation order, OS, and worker count never change the draws. The
key mix is a fixed splitmix-style hash of the id tuple.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1


def _mix(h: int, v: int) -> int:
    # splitmix64 finalizer, used as a hash combiner
    h = (h + 0x9E3779B97F4A7C15 + v) & _MASK
    h = ((h ^ (h >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    h = ((h ^ (h >> 27)) * 0x94D049BB133111EB) & _MASK
    return (h ^ (h >> 31)) & _MASK


def stream_key(seed: int, *stream_ids: int) -> int:
    key = seed & _MASK
    for sid in stream_ids:
        key = _mix(key, sid & _MASK)
    return key


def make_rng(seed: int, *stream_ids: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=stream_key(seed, *stream_ids)))
