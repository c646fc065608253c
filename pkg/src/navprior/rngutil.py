"""Deterministic RNG substream derivation.

Every randomized stage derives its own generator from (master seed, string
keys), so results never depend on the order independent stages run in, and
identical seeds reproduce identical outputs across platforms.
"""

from __future__ import annotations

import hashlib

import numpy as np


def key_entropy(key: str | int) -> int:
    """Stable 64-bit entropy word for a string or integer key."""
    if isinstance(key, int):
        return key & 0xFFFFFFFFFFFFFFFF
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def substream(*keys: str | int) -> np.random.Generator:
    """Generator seeded by the ordered key tuple."""
    if not keys:
        raise ValueError("substream requires at least one key")
    return np.random.default_rng([key_entropy(k) for k in keys])
