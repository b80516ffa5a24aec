"""Stateless derivation of child random streams.

SeedSequence.spawn advances a counter on the parent, so calling it twice
with the same parent gives different children. These helpers derive children
purely from (entropy, spawn_key, index): same inputs, same stream, no
mutation. That keeps every sampler in the package replayable from one
integer seed.
"""

from __future__ import annotations

import numpy as np


def as_seed_sequence(seed) -> np.random.SeedSequence:
    """Accept an int, None, or an existing SeedSequence."""
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def child(parent: np.random.SeedSequence, index: int) -> np.random.SeedSequence:
    """The index-th child stream of parent, derived without mutating it."""
    return np.random.SeedSequence(
        entropy=parent.entropy, spawn_key=tuple(parent.spawn_key) + (index,)
    )
