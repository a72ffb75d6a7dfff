"""Switch-side count-min sketch and its end-host reconstruction.

The switch keeps a d x w array of c-bit saturating counters; each row
hashes flow keys independently and a query returns the minimum mapped
bucket, so estimates never undercount (absent staleness). The end-host
mirror adds a per-bucket validity flag: buckets arrive piecemeal over
the telemetry channel and queries must skip the ones never delivered.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import hashing
from ._backend import kernels as _default_kernels

ALL_VALID = "all-valid"
PARTIAL = "partial"
NO_VALID = "no-valid"


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class SketchParams:
    """Shape of a sketch: d rows, w columns (power of two), c-bit buckets."""

    d: int
    w: int
    c: int
    seed: int = 0

    def __post_init__(self) -> None:
        if self.d < 1:
            raise ValueError(f"d must be >= 1, got {self.d}")
        if self.w < 2 or not _is_pow2(self.w):
            raise ValueError(f"w must be a power of two >= 2, got {self.w}")
        if not 1 <= self.c <= 64:
            raise ValueError(f"c must be in [1, 64], got {self.c}")

    @property
    def cap(self) -> int:
        """Largest representable bucket value, 2^c - 1."""
        return (1 << self.c) - 1

    @property
    def col_bits(self) -> int:
        """Bits in a column address, log2(w)."""
        return self.w.bit_length() - 1


def hash_index(params: SketchParams, row: int, key: int) -> int:
    """Column index of `key` in `row`.

    Deterministic in (seed, row, key); rows use independent keyed hash
    instances. Raises ValueError when row is out of range.
    """
    if not 0 <= row < params.d:
        raise ValueError(f"row must be in [0, {params.d}), got {row}")
    return hashing.column_of(params.seed, params.w, row, key)


def key_columns(params: SketchParams, keys: np.ndarray, kernels=None) -> np.ndarray:
    """Column indices for many keys at once, int64[d, n]."""
    k = kernels if kernels is not None else _default_kernels
    keys = np.ascontiguousarray(keys, dtype=np.uint64)
    rk = hashing.row_keys(params.seed, params.d)
    return k.hash_columns(keys, rk, params.w - 1)


class Sketch:
    """The switch sketch: d x w saturating counters."""

    def __init__(self, params: SketchParams):
        self.params = params
        self.buckets = np.zeros((params.d, params.w), dtype=np.uint64)

    def columns(self, key: int) -> tuple[int, ...]:
        """Mapped column per row for a key."""
        p = self.params
        return tuple(hashing.column_of(p.seed, p.w, i, key) for i in range(p.d))

    def update(self, key: int, inc: int = 1) -> None:
        """Add `inc` to the mapped bucket in every row, saturating at 2^c - 1."""
        if inc < 1:
            raise ValueError(f"inc must be >= 1, got {inc}")
        cap = self.params.cap
        for i, col in enumerate(self.columns(key)):
            cur = int(self.buckets[i, col])
            self.buckets[i, col] = min(cur + inc, cap)

    def query(self, key: int) -> int:
        """Estimated count: min over the d mapped buckets."""
        return min(int(self.buckets[i, col]) for i, col in enumerate(self.columns(key)))

    def query_many(self, keys: np.ndarray, kernels=None) -> np.ndarray:
        """Vectorized query, uint64[n]."""
        cols = key_columns(self.params, keys, kernels)
        gathered = np.take_along_axis(
            self.buckets, cols.astype(np.int64), axis=1
        )
        return gathered.min(axis=0)

    def copy(self) -> "Sketch":
        dup = Sketch(self.params)
        dup.buckets = self.buckets.copy()
        return dup


@dataclass(frozen=True)
class ReconQuery:
    estimate: int
    confidence: str  # ALL_VALID, PARTIAL or NO_VALID


class ReconSketch:
    """End-host mirror of a Sketch plus per-bucket validity flags.

    A bucket is valid once at least one sketchlet delivered it; invalid
    buckets are excluded from queries. Applying a sketchlet overwrites
    unconditionally: the channel is in-order and switch counters only
    grow, so the incoming value is never older than the stored one.
    """

    def __init__(self, params: SketchParams):
        self.params = params
        self.buckets = np.zeros((params.d, params.w), dtype=np.uint64)
        self.valid = np.zeros((params.d, params.w), dtype=np.bool_)

    def apply(self, sketchlet) -> None:
        """Install a decoded sketchlet's buckets and mark them valid."""
        p = self.params
        values = sketchlet.values
        if len(values) != p.d:
            raise ValueError(
                f"sketchlet carries {len(values)} values, sketch has {p.d} rows"
            )
        offsets = getattr(sketchlet, "offsets", None)
        for i, value in enumerate(values):
            col = sketchlet.addr if offsets is None else (sketchlet.addr + offsets[i]) % p.w
            self.buckets[i, col] = value
            self.valid[i, col] = True

    def query(self, key: int) -> ReconQuery:
        p = self.params
        best = None
        n_valid = 0
        for i in range(p.d):
            col = hashing.column_of(p.seed, p.w, i, key)
            if self.valid[i, col]:
                n_valid += 1
                v = int(self.buckets[i, col])
                if best is None or v < best:
                    best = v
        if n_valid == 0:
            return ReconQuery(0, NO_VALID)
        conf = ALL_VALID if n_valid == p.d else PARTIAL
        return ReconQuery(best, conf)

    def query_many(self, keys: np.ndarray, kernels=None) -> tuple[np.ndarray, np.ndarray]:
        """Vectorized query.

        Returns (estimates uint64[n], valid_rows int64[n]); estimates are 0
        where no mapped bucket is valid.
        """
        cols = key_columns(self.params, keys, kernels)
        vals = np.take_along_axis(self.buckets, cols, axis=1)
        ok = np.take_along_axis(self.valid, cols, axis=1)
        # invalid buckets must lose every min comparison
        masked = np.where(ok, vals, np.uint64(0xFFFFFFFFFFFFFFFF))
        est = masked.min(axis=0)
        n_valid = ok.sum(axis=0).astype(np.int64)
        est = np.where(n_valid > 0, est, np.uint64(0))
        return est, n_valid

    def copy(self) -> "ReconSketch":
        dup = ReconSketch(self.params)
        dup.buckets = self.buckets.copy()
        dup.valid = self.valid.copy()
        return dup
