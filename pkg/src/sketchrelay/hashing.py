"""Keyed 64-bit mixing hash used to map flow keys to sketch columns.

Every row of a sketch gets its own hash instance derived from the
sketch seed, so the rows behave as independent hash functions. The
mixer is the 64-bit murmur3 finalizer: cheap, deterministic, and easy
to reproduce bit-for-bit in vectorized numpy and in compiled kernels.
Column indices are the mixed value masked to log2(w) bits, which is
why sketch widths must be powers of two.
"""

from __future__ import annotations

import numpy as np

MASK64 = 0xFFFFFFFFFFFFFFFF

_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xFF51AFD7ED558CCD
_MIX2 = 0xC4CEB9FE1A85EC53


def mix64(x: int) -> int:
    """Finalize-mix a 64-bit integer (murmur3 fmix64)."""
    x &= MASK64
    x ^= x >> 33
    x = (x * _MIX1) & MASK64
    x ^= x >> 33
    x = (x * _MIX2) & MASK64
    x ^= x >> 33
    return x


def row_key(seed: int, row: int) -> int:
    """Per-row hash key derived from the sketch seed."""
    return mix64((seed + (row + 1) * _GOLDEN) & MASK64)


def row_keys(seed: int, d: int) -> np.ndarray:
    """All d per-row hash keys as a uint64 array."""
    return np.array([row_key(seed, i) for i in range(d)], dtype=np.uint64)


def column_of(seed: int, w: int, row: int, key: int) -> int:
    """Column index of `key` in `row`, in [0, w). w must be a power of two."""
    return mix64((key & MASK64) ^ row_key(seed, row)) & (w - 1)


def mix64_array(x: np.ndarray) -> np.ndarray:
    """Vectorized mix64 over a uint64 array. Returns a new array."""
    x = x.astype(np.uint64, copy=True)
    x ^= x >> np.uint64(33)
    x *= np.uint64(_MIX1)
    x ^= x >> np.uint64(33)
    x *= np.uint64(_MIX2)
    x ^= x >> np.uint64(33)
    return x
