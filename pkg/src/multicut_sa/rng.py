"""Seeded random streams.

Every stochastic routine takes an integer seed and builds its own counter-based
Philox generator, optionally keyed by a purpose tag so that independent
sub-streams (instance generation, iteration noise, reporting samples) never
overlap.
"""

import hashlib

import numpy as np


def tag_to_int(tag):
    """Stable 64-bit integer for an arbitrary string tag."""
    digest = hashlib.sha256(str(tag).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def derive_seed(*parts):
    """Combine integers and strings into one 63-bit seed, deterministically."""
    ints = [p if isinstance(p, (int, np.integer)) else tag_to_int(p) for p in parts]
    ss = np.random.SeedSequence([int(i) & 0xFFFFFFFFFFFFFFFF for i in ints])
    return int(ss.generate_state(2, dtype=np.uint64)[0] >> np.uint64(1))


def make_rng(seed, *tags):
    """Philox generator for ``seed``; extra ``tags`` select a sub-stream."""
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None:
        raise ValueError("an explicit integer seed is required")
    key = [int(seed) & 0xFFFFFFFFFFFFFFFF] + [tag_to_int(t) for t in tags]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(key)))
