"""Packet-trace ingestion and synthesis.

Traces are streams of timestamped flow keys. Real traces come in as CSV
(`timestamp,flow_key` per line, header optional, gzip by extension);
synthetic ones are generated with a Zipf-skewed flow popularity, which
is the shape real flow-rate distributions take. Keys are opaque 64-bit
integers; mapping 5-tuples to keys is preprocessing outside this
library.
"""

from __future__ import annotations

import gzip
import io
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

DATA = "data"
INT = "int"


class TraceParseError(ValueError):
    """Malformed trace input; message carries the offending line number."""


@dataclass(frozen=True)
class TraceEvent:
    timestamp: float
    key: int
    kind: str = DATA


class Trace:
    """A column-oriented event stream: float64 timestamps, uint64 keys.

    Timestamps are nondecreasing. `duration` is the nominal length of
    the capture in seconds; it may exceed the last timestamp.
    """

    def __init__(
        self,
        timestamps: np.ndarray,
        keys: np.ndarray,
        duration: float | None = None,
    ):
        self.timestamps = np.asarray(timestamps, dtype=np.float64)
        self.keys = np.asarray(keys, dtype=np.uint64)
        if self.timestamps.shape != self.keys.shape:
            raise ValueError("timestamps and keys must have equal length")
        if self.timestamps.size and np.any(np.diff(self.timestamps) < 0):
            raise ValueError("trace timestamps must be nondecreasing")
        self.duration = duration

    def __len__(self) -> int:
        return int(self.timestamps.size)

    def __iter__(self) -> Iterator[TraceEvent]:
        for t, key in zip(self.timestamps, self.keys):
            yield TraceEvent(float(t), int(key))

    @classmethod
    def from_events(cls, events: Iterable[TraceEvent], duration: float | None = None) -> "Trace":
        ts = []
        keys = []
        for ev in events:
            if ev.kind != DATA:
                raise ValueError(
                    "traces carry data packets only; telemetry packets are "
                    "injected by the simulator"
                )
            ts.append(ev.timestamp)
            keys.append(ev.key)
        return cls(np.array(ts, dtype=np.float64), np.array(keys, dtype=np.uint64), duration)


def _open_text(path: str):
    if str(path).endswith(".gz"):
        return io.TextIOWrapper(gzip.open(path, "rb"), encoding="utf-8")
    return open(path, "r", encoding="utf-8")


def load_csv(path: str) -> Trace:
    """Load a `timestamp,flow_key` CSV; validates ordering and field syntax.

    An optional single header line is skipped. Raises TraceParseError with
    the 1-based line number on malformed lines, and on timestamps that go
    backwards.
    """
    ts: list[float] = []
    keys: list[int] = []
    with _open_text(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise TraceParseError(
                    f"line {lineno}: expected 'timestamp,flow_key', got {line!r}"
                )
            try:
                t = float(parts[0])
            except ValueError:
                if lineno == 1:
                    continue  # header line
                raise TraceParseError(
                    f"line {lineno}: bad timestamp {parts[0]!r}"
                ) from None
            try:
                key = int(parts[1])
            except ValueError:
                raise TraceParseError(
                    f"line {lineno}: bad flow_key {parts[1]!r}"
                ) from None
            if not 0 <= key < (1 << 64):
                raise TraceParseError(
                    f"line {lineno}: flow_key {key} out of 64-bit range"
                )
            if ts and t < ts[-1]:
                raise TraceParseError(
                    f"line {lineno}: timestamp {t} decreases (previous {ts[-1]})"
                )
            ts.append(t)
            keys.append(key)
    return Trace(np.array(ts, dtype=np.float64), np.array(keys, dtype=np.uint64))


def write_csv(trace: Trace, path: str) -> None:
    """Write a trace in the exact format load_csv reads back (no header).

    Timestamps use repr(), so write -> load -> write reproduces the file
    byte for byte.
    """
    opener = gzip.open if str(path).endswith(".gz") else open
    with opener(path, "wt", encoding="utf-8", newline="") as fh:
        for t, key in zip(trace.timestamps, trace.keys):
            fh.write(f"{float(t)!r},{int(key)}\n")


@dataclass(frozen=True)
class ZipfSpec:
    """Synthetic workload: `packets` packets over `flows` flows whose
    popularity follows rank^(-skew), spread uniformly over `duration`
    seconds."""

    flows: int
    packets: int
    skew: float = 1.0
    duration: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.flows < 1:
            raise ValueError(f"flows must be >= 1, got {self.flows}")
        if self.packets < self.flows:
            raise ValueError("packets must be >= flows")
        if self.skew < 0:
            raise ValueError(f"skew must be >= 0, got {self.skew}")
        if self.duration <= 0:
            raise ValueError(f"duration must be > 0, got {self.duration}")


def gen_zipf(spec: ZipfSpec) -> Trace:
    """Deterministic Zipf-skewed trace for a given seed."""
    rng = np.random.default_rng(spec.seed)
    flow_keys = _distinct_keys(rng, spec.flows)
    ranks = np.arange(1, spec.flows + 1, dtype=np.float64)
    weights = ranks ** (-spec.skew)
    probs = weights / weights.sum()
    choice = rng.choice(spec.flows, size=spec.packets, p=probs)
    keys = flow_keys[choice]
    ts = np.sort(rng.uniform(0.0, spec.duration, size=spec.packets))
    return Trace(ts, keys, duration=spec.duration)


def _distinct_keys(rng: np.random.Generator, n: int) -> np.ndarray:
    keys = rng.integers(1, 1 << 63, size=n, dtype=np.uint64)
    while np.unique(keys).size < n:  # 64-bit collisions are vanishingly rare
        keys = rng.integers(1, 1 << 63, size=n, dtype=np.uint64)
    return keys
