"""
Seed derivation and the portable random generator.

All randomness in the toolkit comes from :func:`make_rng`, which wraps numpy's
PCG64 bit generator.  Child seeds are derived with the SplitMix64 finalizer so a
seed depends only on its parent seed and an integer path, never on execution
order:

    z = (seed + (salt + 1) * 0x9E3779B97F4A7C15) mod 2**64
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 mod 2**64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB mod 2**64
    z =  z ^ (z >> 31)
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
MIX_MUL_1 = 0xBF58476D1CE4E5B9
MIX_MUL_2 = 0x94D049BB133111EB

# salts for seeds derived from a per-sample seed
SALT_TARGETS = 1
SALT_SPLIT = 2
SALT_ALGORITHM = 16


def mix64(seed: int, salt: int) -> int:
    """Derive a 64-bit child seed from ``seed`` and ``salt``."""
    z = (int(seed) + (int(salt) + 1) * GOLDEN_GAMMA) & MASK64
    z = ((z ^ (z >> 30)) * MIX_MUL_1) & MASK64
    z = ((z ^ (z >> 27)) * MIX_MUL_2) & MASK64
    return z ^ (z >> 31)


def derive(seed: int, *path: int) -> int:
    for salt in path:
        seed = mix64(seed, salt)
    return seed


def make_rng(seed: int) -> np.random.Generator:
    if seed < 0 or seed > MASK64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return np.random.Generator(np.random.PCG64(int(seed)))
