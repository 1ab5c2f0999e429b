"""Deterministic random substreams.

A stream is a plain :class:`numpy.random.Generator`. Substreams are keyed by
``(master_seed, *keys)`` through :class:`numpy.random.SeedSequence`, whose
spawn key hashes the whole tuple into a 128-bit state, so the stream for a
given (point, trial, role) never depends on scheduling order.
"""

from __future__ import annotations

import zlib

import numpy as np

RandomStream = np.random.Generator


def role_key(tag: str) -> int:
    return zlib.crc32(tag.encode("utf-8"))


def derive(master_seed: int, *keys) -> RandomStream:
    """Return the generator for ``master_seed`` and an ordered key path.

    String keys are mapped to stable 32-bit integers, so
    ``derive(7, 3, 12, "family")`` is the same stream on every machine.
    """
    spawn_key = tuple(role_key(k) if isinstance(k, str) else int(k) for k in keys)
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=spawn_key)
    return np.random.Generator(np.random.PCG64(ss))


def as_stream(rng) -> RandomStream:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)
