"""Deterministic sub-seed derivation.

Every command takes a single seed; components (weight init, shuffling,
dropout masks, ...) each get their own stream derived from that seed and
a label, so changing how one component consumes randomness never shifts
the others. Derivation is a stable hash, independent of platform and
Python hash randomization.
"""

from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(seed: int, label: str) -> int:
    """Stable 64-bit sub-seed for (seed, label)."""
    digest = hashlib.sha256(f"{int(seed)}|{label}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def rng_for(seed: int, label: str) -> np.random.Generator:
    """Fresh generator for the named component."""
    return np.random.default_rng(derive_seed(seed, label))
