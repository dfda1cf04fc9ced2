"""Deterministic seed derivation.

Every randomized stage of the pipeline receives its own child seed derived
from the single top-level run seed, so adding or reordering stages never
shifts the random streams of the others.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _mix(x: int) -> int:
    # splitmix64 finalizer
    x &= _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def derive_seed(root: int, *tags: int | str) -> int:
    """Derive a 64-bit child seed from a root seed and a tag path.

    Tags may be ints or short strings; the same path always yields the
    same child seed and distinct paths are decorrelated.
    """
    state = _mix((int(root) + _GOLDEN) & _MASK64)
    for tag in tags:
        if isinstance(tag, str):
            for byte in tag.encode("utf-8"):
                state = _mix((state + _GOLDEN + byte) & _MASK64)
        else:
            state = _mix((state + _GOLDEN + (int(tag) & _MASK64)) & _MASK64)
    return state


def rng_for(root: int, *tags: int | str) -> np.random.Generator:
    """A numpy Generator seeded from the derived child seed."""
    return np.random.default_rng(derive_seed(root, *tags))
