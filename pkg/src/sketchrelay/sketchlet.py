"""Sketchlet wire codec and transfer-efficiency analysis.

A sketchlet is the unit shipped to the end-host inside a telemetry
packet: one bucket per sketch row. The column form carries a whole
column at one address; the scatter form adds an r-bit offset per row so
each row's bucket can be picked independently from the window
[addr, addr + 2^r - 1]. Wire layout is fixed so encodings are portable:
fields packed MSB-first in the order addr, offsets[0..d-1],
values[0..d-1], zero-padded to a whole byte.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import hashing


class WireFormatError(ValueError):
    """Raised when bytes cannot be decoded as a sketchlet."""


@dataclass(frozen=True)
class ColumnSketchlet:
    """One whole sketch column: addr plus d bucket values."""

    addr: int
    values: tuple[int, ...]


@dataclass(frozen=True)
class ScatterSketchlet:
    """One bucket per row, row i at column (addr + offsets[i]) mod w."""

    addr: int
    offsets: tuple[int, ...]
    values: tuple[int, ...]


@dataclass(frozen=True)
class WireFormat:
    """Bit-exact encoder/decoder for sketchlets of a fixed geometry.

    r = 0 encodes/decodes ColumnSketchlet (no offset fields), r >= 1 the
    scatter form.
    """

    d: int
    w: int
    c: int
    r: int

    def __post_init__(self) -> None:
        if self.d < 1:
            raise ValueError(f"d must be >= 1, got {self.d}")
        if self.w < 2 or (self.w & (self.w - 1)) != 0:
            raise ValueError(f"w must be a power of two >= 2, got {self.w}")
        if not 1 <= self.c <= 64:
            raise ValueError(f"c must be in [1, 64], got {self.c}")
        if self.r < 0:
            raise ValueError(f"r must be >= 0, got {self.r}")

    @property
    def col_bits(self) -> int:
        return self.w.bit_length() - 1

    @property
    def bits(self) -> int:
        """Encoded payload size in bits: d*c + log2(w) + d*r."""
        return self.d * self.c + self.col_bits + self.d * self.r

    @property
    def nbytes(self) -> int:
        return (self.bits + 7) // 8

    def encode(self, sk: ColumnSketchlet | ScatterSketchlet) -> bytes:
        offsets: tuple[int, ...]
        if isinstance(sk, ColumnSketchlet):
            if self.r != 0:
                raise ValueError("column sketchlet requires r == 0")
            offsets = ()
        elif isinstance(sk, ScatterSketchlet):
            if self.r == 0:
                raise ValueError("scatter sketchlet requires r >= 1")
            offsets = sk.offsets
            if len(offsets) != self.d:
                raise ValueError(f"expected {self.d} offsets, got {len(offsets)}")
        else:
            raise TypeError(f"cannot encode {type(sk).__name__}")
        if len(sk.values) != self.d:
            raise ValueError(f"expected {self.d} values, got {len(sk.values)}")
        if not 0 <= sk.addr < self.w:
            raise ValueError(f"addr {sk.addr} out of [0, {self.w})")

        acc = sk.addr
        for off in offsets:
            if not 0 <= off < (1 << self.r):
                raise ValueError(f"offset {off} out of [0, {1 << self.r})")
            acc = (acc << self.r) | off
        cap = (1 << self.c) - 1
        for v in sk.values:
            if not 0 <= v <= cap:
                raise ValueError(f"value {v} out of [0, {cap}]")
            acc = (acc << self.c) | int(v)
        acc <<= self.nbytes * 8 - self.bits
        return acc.to_bytes(self.nbytes, "big")

    def decode(self, data: bytes) -> ColumnSketchlet | ScatterSketchlet:
        if len(data) != self.nbytes:
            raise WireFormatError(
                f"expected {self.nbytes} bytes, got {len(data)}"
            )
        acc = int.from_bytes(data, "big")
        pad = self.nbytes * 8 - self.bits
        if acc & ((1 << pad) - 1):
            raise WireFormatError("nonzero padding bits")
        acc >>= pad

        shift = self.bits
        def take(nbits: int) -> int:
            nonlocal shift
            shift -= nbits
            return (acc >> shift) & ((1 << nbits) - 1)

        addr = take(self.col_bits)
        offsets = tuple(take(self.r) for _ in range(self.d)) if self.r else ()
        values = tuple(take(self.c) for _ in range(self.d))
        if self.r == 0:
            return ColumnSketchlet(addr, values)
        return ScatterSketchlet(addr, offsets, values)


@dataclass(frozen=True)
class EfficiencyParams:
    """Inputs to the bit-efficiency model: N flows over a d x w sketch,
    c-bit buckets, r-bit offsets (r = 0 for the column form)."""

    N: int
    w: int
    d: int
    c: int
    r: int

    def __post_init__(self) -> None:
        if min(self.N, self.w, self.d, self.c) < 1 or self.r < 0:
            raise ValueError("N, w, d, c must be positive and r >= 0")


def bit_efficiency(p: EfficiencyParams) -> float:
    """Fraction of sketchlet bits that carry valid measurement data.

    A bucket is valid when at least one of the N flows hashes into it;
    over the window [addr, addr + 2^r - 1] a valid bucket exists with
    probability 1 - exp(-N/w * 2^r). Payload bits per sketchlet are d*c,
    address overhead log2(w) + d*r.
    """
    valid = 1.0 - math.exp(-(p.N / p.w) * (1 << p.r))
    return (valid * p.d * p.c) / (p.d * p.c + math.log2(p.w) + p.d * p.r)


def scatter_advantage_bound(w: int, d: int, c: int, r: int) -> float:
    """Flow-count bound below which the scatter form beats the column form.

    Whenever N < w * ln((d*c + log2 w) / (d*r)), a scatter sketchlet with
    this r >= 1 has strictly higher bit efficiency than the column form.
    """
    if r < 1:
        raise ValueError(f"r must be >= 1, got {r}")
    return w * math.log((d * c + math.log2(w)) / (d * r))


def collision_probability(N: int, w: int, d: int) -> float:
    """Probability a given flow shares all d of its buckets with other flows.

    (1 - (1 - 1/w)^(N-1))^d: in each row the flow collides when any of
    the other N-1 flows lands in its column, and rows hash independently.
    """
    if min(N, w, d) < 1:
        raise ValueError("N, w, d must be positive")
    return (1.0 - (1.0 - 1.0 / w) ** (N - 1)) ** d


def valid_fraction_oracle(
    N: int,
    w: int,
    r: int,
    d: int = 1,
    trials: int = 100_000,
    seed: int = 0,
    trials_per_population: int | None = None,
) -> float:
    """Monte Carlo probability that a selection window holds a valid bucket.

    Populates rows by hashing N random keys (the real row hash), then
    samples random window starts and checks [addr, addr + 2^r - 1] (mod w)
    for an occupied column. Expectation approaches 1 - exp(-(N/w) * 2^r).

    Several trials share one hashed population. Invalid windows cluster
    (one empty stretch of columns invalidates ~2^r consecutive starts), so
    the default trials-per-population shrinks with the window/row ratio to
    keep the estimator's variance near binomial.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if N == 0:
        return 0.0
    rng = np.random.default_rng(seed)
    win = min(1 << r, w)  # a window covering the whole row cannot wrap past it
    if trials_per_population is None:
        trials_per_population = max(1, min(2_000, w // (8 * (win + 1))))
    hits = 0
    done = 0
    while done < trials:
        batch = min(trials_per_population, trials - done)
        keys = rng.integers(0, 1 << 63, size=N, dtype=np.uint64)
        row = int(rng.integers(0, d))
        rk = np.uint64(hashing.row_key(seed, row))
        cols = (hashing.mix64_array(keys ^ rk) & np.uint64(w - 1)).astype(np.int64)
        occ = np.zeros(w, dtype=bool)
        occ[cols] = True
        # windowed any-occupied via prefix sums, wrapping mod w
        ext = np.concatenate([occ, occ[: win - 1]]) if win > 1 else occ
        cs = np.concatenate([[0], np.cumsum(ext)])
        window_hit = (cs[win:] - cs[:-win])[:w] > 0 if win > 1 else occ
        addrs = rng.integers(0, w, size=batch)
        hits += int(window_hit[addrs].sum())
        done += batch
    return hits / trials
