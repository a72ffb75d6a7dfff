"""Discrete-event replay: switch, telemetry channel, and end-host loop.

Data packets drive the sketch and the selection policy's freshness
structure; telemetry packets are injected every 1/pps trace-seconds,
each carrying one sketchlet over an in-order lossless channel straight
into the end-host reconstruction. Staleness at the end-host therefore
comes only from the pps budget.

Data packets between two telemetry packets commute (saturating adds and
flag sets), so the replay batches them through the backend kernels and
only the per-telemetry-packet selection logic runs event by event. The
suite checks this batched path against a literal one-packet-at-a-time
replay.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from ._backend import kernels as _default_kernels
from .selection import BitmapPolicy, CookiePolicy, KChancePolicy, SoftwarePolicy
from .sketch import ReconSketch, Sketch, SketchParams, key_columns
from .sketchlet import WireFormat
from .traceio import Trace

POLICIES = ("bitmap", "cookie", "software", "kchance")


class NotApplicableError(ValueError):
    """The register-access model does not cover this configuration."""


@dataclass(frozen=True)
class SimConfig:
    """One simulation run: sketch geometry, policy knobs, telemetry budget.

    `pps` is telemetry packets per second of trace time. `duration`
    defaults to the trace's nominal duration (or its last timestamp);
    snapshots default to a single one at the end of the run.
    `hardware_faithful` aligns window starts to multiples of 2^r, the
    layout a row split into 2^r single-access registers forces.
    """

    d: int = 2
    w: int = 2 ** 15
    c: int = 64
    seed: int = 0
    policy: str = "cookie"
    pps: float = 1000.0
    r: int = 6
    b: int = 8
    s: int = 1
    h: int | None = None
    alpha: float = 0.5
    beta: float = 1.0
    adapt_period: int = 100
    phi: int = 50
    phi_prime: int = 100
    scan_interval: float = 0.01
    k: int = 8
    retry_limit: int = 32
    hardware_faithful: bool = True
    duration: float | None = None
    snapshot_times: tuple[float, ...] | None = None

    def validate(self) -> None:
        SketchParams(self.d, self.w, self.c, self.seed)  # reuses its checks
        if self.policy not in POLICIES:
            raise ValueError(f"policy must be one of {POLICIES}, got {self.policy!r}")
        if self.pps <= 0:
            raise ValueError(f"pps must be > 0, got {self.pps}")
        col_bits = self.w.bit_length() - 1
        if self.policy in ("bitmap", "cookie", "software") and not 0 <= self.r <= col_bits:
            raise ValueError(f"r must be in [0, {col_bits}], got {self.r}")
        if self.policy in ("cookie", "software"):
            if not 1 <= self.b <= 64:
                raise ValueError(f"b must be in [1, 64], got {self.b}")
            if self.s < 0:
                raise ValueError(f"s must be >= 0, got {self.s}")
        if self.policy == "cookie" and self.adapt_period < 1:
            raise ValueError("adapt_period must be >= 1")
        if self.policy == "software" and self.scan_interval <= 0:
            raise ValueError("scan_interval must be > 0")
        if self.policy == "kchance" and self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")

    def sketch_params(self) -> SketchParams:
        return SketchParams(self.d, self.w, self.c, self.seed)


def register_accesses(cfg: SimConfig) -> tuple[int, int]:
    """Registers touched per (data packet, telemetry packet).

    A data packet updates d sketch rows and d freshness rows; a telemetry
    packet reads d sketch rows plus the d*2^r freshness registers of the
    split-row layout. Only defined for the register-faithful bitmap and
    cookie policies; the software policy scans proactively rather than
    per packet, and the column baseline has no defined register model.
    """
    if cfg.policy not in ("bitmap", "cookie"):
        raise NotApplicableError(
            f"register accounting is not defined for the {cfg.policy!r} policy"
        )
    if not cfg.hardware_faithful:
        raise NotApplicableError("register accounting requires hardware_faithful mode")
    return 2 * cfg.d, cfg.d + cfg.d * (1 << cfg.r)


@dataclass
class RegisterAccessCounter:
    """Totals of modeled register accesses, overall and per trace second."""

    per_data_packet: int
    per_int_packet: int
    data_packet_accesses: int = 0
    int_packet_accesses: int = 0
    per_second: list[tuple[int, int, int]] = field(default_factory=list)

    @property
    def total(self) -> int:
        return self.data_packet_accesses + self.int_packet_accesses


@dataclass
class SimSnapshot:
    """Switch and end-host state frozen at one trace time."""

    time: float
    switch: Sketch
    recon: ReconSketch
    truth: dict[int, int]


@dataclass
class SimResult:
    config: SimConfig
    sketch: Sketch
    recon: ReconSketch
    snapshots: list[SimSnapshot]
    truth: dict[int, int]
    registers: RegisterAccessCounter | None
    int_packets: int
    sketchlet_count: int
    sketchlet_bytes: int


def _trace_arrays(trace) -> tuple[np.ndarray, np.ndarray, float | None]:
    if isinstance(trace, Trace):
        return trace.timestamps, trace.keys, trace.duration
    tr = Trace.from_events(trace)
    return tr.timestamps, tr.keys, tr.duration


def make_policy(cfg: SimConfig, kernels=None):
    params = cfg.sketch_params()
    if cfg.policy == "bitmap":
        return BitmapPolicy(params, cfg.r, cfg.hardware_faithful, kernels=kernels)
    if cfg.policy == "cookie":
        return CookiePolicy(
            params, cfg.r, cfg.b, cfg.s, cfg.h, cfg.alpha, cfg.beta,
            cfg.hardware_faithful, kernels=kernels,
        )
    if cfg.policy == "software":
        return SoftwarePolicy(
            params, cfg.r, cfg.b, cfg.s, cfg.h, cfg.phi, cfg.phi_prime,
            kernels=kernels,
        )
    if cfg.policy == "kchance":
        return KChancePolicy(params, cfg.k, cfg.retry_limit, kernels=kernels)
    raise ValueError(f"unknown policy {cfg.policy!r}")


_SCAN, _INT, _SNAPSHOT = 0, 1, 2  # tie-break order at equal trace times


def run(trace, cfg: SimConfig, kernels=None) -> SimResult:
    """Replay a data trace under one configuration.

    Deterministic for a fixed (trace, cfg): the only randomness is the
    policy's address draws, seeded from cfg.seed. Raises on traces whose
    timestamps go backwards.
    """
    k = kernels if kernels is not None else _default_kernels
    cfg.validate()
    ts, keys, trace_duration = _trace_arrays(trace)
    if ts.size and np.any(np.diff(ts) < 0):
        raise ValueError("trace timestamps must be nondecreasing")

    if cfg.duration is not None:
        duration = cfg.duration
    elif trace_duration is not None:
        duration = trace_duration
    else:
        duration = float(ts[-1]) if ts.size else 0.0

    params = cfg.sketch_params()
    sketch = Sketch(params)
    recon = ReconSketch(params)
    policy = make_policy(cfg, kernels=k)
    rng = np.random.default_rng(cfg.seed)
    wire = WireFormat(cfg.d, cfg.w, cfg.c, 0 if cfg.policy == "kchance" else cfg.r)

    n_int = int(np.floor(duration * cfg.pps + 1e-9))
    int_times = [(i + 1) / cfg.pps for i in range(n_int)]
    snapshot_times = sorted(cfg.snapshot_times) if cfg.snapshot_times else [duration]

    points: list[tuple[float, int]] = [(t, _INT) for t in int_times]
    points += [(t, _SNAPSHOT) for t in snapshot_times]
    if cfg.policy == "software":
        n_scan = int(np.floor(duration / cfg.scan_interval + 1e-9))
        points += [((i + 1) * cfg.scan_interval, _SCAN) for i in range(n_scan)]
    points.sort()

    cols = key_columns(params, keys, kernels=k) if ts.size else None

    try:
        per_data, per_int = register_accesses(cfg)
        registers = RegisterAccessCounter(per_data, per_int)
    except NotApplicableError:
        registers = None

    snapshots: list[SimSnapshot] = []
    pos = 0
    int_seen = 0
    delivered = 0
    payload_bytes = 0

    def feed_data(until: float) -> None:
        nonlocal pos
        j = int(np.searchsorted(ts, until, side="right"))
        if j > pos:
            policy.on_data_batch(sketch, cols[:, pos:j])
            pos = j

    for when, tag in points:
        feed_data(when)
        if tag == _SCAN:
            policy.scan()
            policy.adapt()
        elif tag == _INT:
            sklet = policy.on_int(sketch, rng)
            int_seen += 1
            if sklet is not None:
                payload = wire.encode(sklet)
                recon.apply(wire.decode(payload))
                delivered += 1
                payload_bytes += len(payload)
            if cfg.policy == "cookie" and int_seen % cfg.adapt_period == 0:
                policy.adapt()
        else:
            truth = _counts_until(keys, pos)
            snapshots.append(SimSnapshot(when, sketch.copy(), recon.copy(), truth))
    feed_data(np.inf)

    if registers is not None:
        _fill_register_counter(registers, ts, int_times)

    return SimResult(
        config=cfg,
        sketch=sketch,
        recon=recon,
        snapshots=snapshots,
        truth=_counts_until(keys, len(keys)),
        registers=registers,
        int_packets=int_seen,
        sketchlet_count=delivered,
        sketchlet_bytes=payload_bytes,
    )


def _counts_until(keys: np.ndarray, n: int) -> dict[int, int]:
    uniq, counts = np.unique(keys[:n], return_counts=True)
    return {int(u): int(c) for u, c in zip(uniq, counts)}


def _fill_register_counter(
    counter: RegisterAccessCounter, ts: np.ndarray, int_times: Sequence[float]
) -> None:
    counter.data_packet_accesses = counter.per_data_packet * int(ts.size)
    counter.int_packet_accesses = counter.per_int_packet * len(int_times)
    data_secs = np.floor(ts).astype(int) if ts.size else np.array([], dtype=int)
    int_secs = np.floor(np.asarray(int_times)).astype(int) if int_times else np.array([], dtype=int)
    horizon = int(max(data_secs.max() if data_secs.size else 0,
                      int_secs.max() if int_secs.size else 0)) + 1
    data_bins = np.bincount(data_secs, minlength=horizon)
    int_bins = np.bincount(int_secs, minlength=horizon)
    counter.per_second = [
        (sec, int(data_bins[sec]) * counter.per_data_packet,
         int(int_bins[sec]) * counter.per_int_packet)
        for sec in range(horizon)
    ]


def snapshot_compare(
    switch: Sketch,
    recon: ReconSketch,
    truth: Mapping[int, int],
    keys: Sequence[int] | None = None,
) -> list[tuple[int, int, int, int]]:
    """Align per-flow (truth, switch estimate, end-host estimate) triples.

    Both sketches must share parameters and be snapshots of the same
    trace time for the comparison to be meaningful.
    """
    if switch.params != recon.params:
        raise ValueError("switch and reconstruction have different parameters")
    if keys is None:
        keys = sorted(truth)
    out = []
    for key in keys:
        out.append(
            (int(key), int(truth.get(key, 0)), switch.query(key), recon.query(key).estimate)
        )
    return out
