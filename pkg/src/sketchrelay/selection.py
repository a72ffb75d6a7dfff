"""Bucket-selection policies: which sketch buckets ride each telemetry packet.

Four policies, all emitting one sketchlet per telemetry packet:

* flag-bit (bitmap): a d x w bit array marks buckets updated since they
  were last shipped; the first marked bucket in a random window wins.
* counter (cookie): a d x w array of small saturating counters traces
  update frequency; a bucket qualifies when its cell crosses an adaptive
  threshold 2^h - 1, and shipping right-shifts the cell by s. Selection
  frequency tracks update frequency.
* software scan: same counter structure, but a proactive full scan
  (built for software switches) queues candidate addresses in a FIFO
  that telemetry packets drain.
* k-chance column baseline: k bit arrays give every column up to k
  sends at random; no freshness signal.

The window fallback is deliberate: when nothing in [addr, addr+2^r-1]
qualifies, the bucket at offset 2^r - 1 is shipped anyway so sketchlets
keep a fixed size; the adaptive threshold exists to keep the qualifying
ratio in band.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from ._backend import kernels as _default_kernels
from .sketch import Sketch, SketchParams
from .sketchlet import ColumnSketchlet, ScatterSketchlet


@dataclass
class SelectorState:
    """Adaptive-threshold state shared by the counter-based policies.

    h is the threshold exponent (cells qualify at >= 2^h - 1), s the
    right-shift applied to a shipped cell. cell_cnt counts qualifying
    selections and pkt_cnt telemetry packets; their ratio drives the
    packet-driven adaptation, FIFO depth drives the software one.
    """

    h: int
    s: int
    b: int
    alpha: float = 0.5
    beta: float = 1.0
    cell_cnt: int = 0
    pkt_cnt: int = 0

    def __post_init__(self) -> None:
        if not 1 <= self.h <= self.b:
            raise ValueError(f"h must be in [1, {self.b}], got {self.h}")

    @property
    def threshold(self) -> int:
        return (1 << self.h) - 1


def adapt_threshold(state: SelectorState, d: int) -> None:
    """Periodic threshold adaptation from the qualifying ratio.

    ratio = cell_cnt / (d * pkt_cnt); below alpha the policy is being too
    selective (h down), above beta not selective enough (h up). h stays
    in [1, b]. Counters reset afterwards.
    """
    if state.pkt_cnt == 0:
        return
    ratio = state.cell_cnt / (d * state.pkt_cnt)
    if ratio < state.alpha:
        state.h = max(1, state.h - 1)
    elif ratio > state.beta:
        state.h = min(state.b, state.h + 1)
    state.cell_cnt = 0
    state.pkt_cnt = 0


def adapt_threshold_by_queue(
    state: SelectorState, queue_len: int, low: int, high: int
) -> None:
    """FIFO-depth adaptation for the software policy.

    A starved queue (len < low) lowers h to admit more candidates, an
    overfull one (len > high) raises it. h stays in [1, b].
    """
    if queue_len < low:
        state.h = max(1, state.h - 1)
    elif queue_len > high:
        state.h = min(state.b, state.h + 1)


def _draw_addr(rng: np.random.Generator, w: int, window: int, aligned: bool) -> int:
    # Register-faithful mode models a row split into 2^r single-access
    # registers, so window starts are multiples of 2^r.
    if aligned:
        return int(rng.integers(0, w // window)) * window
    return int(rng.integers(0, w))


def _emit(addr: int, offsets: tuple[int, ...], values: tuple[int, ...], r: int):
    # with a zero-width window the scatter form degenerates to a column
    if r == 0:
        return ColumnSketchlet(addr, values)
    return ScatterSketchlet(addr, offsets, values)


class BitmapPolicy:
    """Flag-bit selection: ship the first updated bucket in a random window."""

    def __init__(
        self,
        params: SketchParams,
        r: int,
        hardware_faithful: bool = True,
        kernels=None,
    ):
        if not 0 <= r <= params.col_bits:
            raise ValueError(f"r must be in [0, log2(w)], got {r}")
        self.params = params
        self.r = r
        self.window = 1 << r
        self.hardware_faithful = hardware_faithful
        self.bits = np.zeros((params.d, params.w), dtype=np.bool_)
        self._kernels = kernels if kernels is not None else _default_kernels

    def on_data(self, sketch: Sketch, key: int, inc: int = 1) -> None:
        """Count a data packet: update the sketch and mark its buckets."""
        sketch.update(key, inc)
        for i, col in enumerate(sketch.columns(key)):
            self.bits[i, col] = True

    def on_data_batch(self, sketch: Sketch, cols: np.ndarray) -> None:
        """Batch of unit-increment data packets, cols int64[d, n]."""
        k = self._kernels
        cap = np.uint64(sketch.params.cap)
        for i in range(self.params.d):
            k.saturating_add_unit(sketch.buckets[i], cols[i], cap)
            k.set_flags(self.bits[i], cols[i])

    def on_int(self, sketch: Sketch, rng: np.random.Generator) -> ScatterSketchlet:
        """Build the scatter sketchlet for one telemetry packet.

        Per row: first set bit in the window is shipped and cleared; with
        no set bit the scan falls through to offset 2^r - 1.
        """
        p = self.params
        addr = _draw_addr(rng, p.w, self.window, self.hardware_faithful)
        offsets = []
        values = []
        for i in range(p.d):
            cols = (addr + np.arange(self.window)) % p.w
            marked = np.flatnonzero(self.bits[i, cols])
            j = int(marked[0]) if marked.size else self.window - 1
            col = (addr + j) % p.w
            self.bits[i, col] = False
            offsets.append(j)
            values.append(int(sketch.buckets[i, col]))
        return _emit(addr, tuple(offsets), tuple(values), self.r)


class CookiePolicy:
    """Frequency-tracking selection over b-bit saturating cells."""

    def __init__(
        self,
        params: SketchParams,
        r: int,
        b: int = 8,
        s: int = 1,
        h: int | None = None,
        alpha: float = 0.5,
        beta: float = 1.0,
        hardware_faithful: bool = True,
        kernels=None,
    ):
        if not 0 <= r <= params.col_bits:
            raise ValueError(f"r must be in [0, log2(w)], got {r}")
        if not 1 <= b <= 64:
            raise ValueError(f"b must be in [1, 64], got {b}")
        self.params = params
        self.r = r
        self.window = 1 << r
        self.b = b
        self.cell_cap = (1 << b) - 1
        self.hardware_faithful = hardware_faithful
        self.cells = np.zeros((params.d, params.w), dtype=np.uint64)
        self.state = SelectorState(h=h if h is not None else b // 2 or 1,
                                   s=s, b=b, alpha=alpha, beta=beta)
        self._kernels = kernels if kernels is not None else _default_kernels

    def on_data(self, sketch: Sketch, key: int, inc: int = 1) -> None:
        """Count a data packet: update the sketch, bump the mapped cells."""
        sketch.update(key, inc)
        for i, col in enumerate(sketch.columns(key)):
            cur = int(self.cells[i, col])
            self.cells[i, col] = min(cur + inc, self.cell_cap)

    def on_data_batch(self, sketch: Sketch, cols: np.ndarray) -> None:
        k = self._kernels
        cap = np.uint64(sketch.params.cap)
        for i in range(self.params.d):
            k.saturating_add_unit(sketch.buckets[i], cols[i], cap)
            k.saturating_add_unit(self.cells[i], cols[i], np.uint64(self.cell_cap))

    def on_int(self, sketch: Sketch, rng: np.random.Generator) -> ScatterSketchlet:
        """Ship the first cell in the window crossing 2^h - 1, then decay it.

        The chosen cell (fallback included) is right-shifted by s bits, so
        a bucket must accumulate fresh updates before it is shipped again.
        """
        p = self.params
        st = self.state
        st.pkt_cnt += 1
        thr = np.uint64(st.threshold)
        addr = _draw_addr(rng, p.w, self.window, self.hardware_faithful)
        offsets = []
        values = []
        for i in range(p.d):
            cols = (addr + np.arange(self.window)) % p.w
            qualifying = np.flatnonzero(self.cells[i, cols] >= thr)
            if qualifying.size:
                j = int(qualifying[0])
                st.cell_cnt += 1
            else:
                j = self.window - 1
            col = (addr + j) % p.w
            self.cells[i, col] = self.cells[i, col] >> np.uint64(st.s)
            offsets.append(j)
            values.append(int(sketch.buckets[i, col]))
        return _emit(addr, tuple(offsets), tuple(values), self.r)

    def adapt(self) -> None:
        adapt_threshold(self.state, self.params.d)


class SoftwarePolicy:
    """Proactive-scan selection for software switches.

    Data packets feed the same counter cells as CookiePolicy; a periodic
    scan pass walks the whole structure, queues finished address tuples,
    and decays their cells. Telemetry packets pop the FIFO; an empty FIFO
    ships nothing.
    """

    def __init__(
        self,
        params: SketchParams,
        r: int,
        b: int = 8,
        s: int = 1,
        h: int | None = None,
        low_watermark: int = 50,
        high_watermark: int = 100,
        kernels=None,
    ):
        if not 0 <= r <= params.col_bits:
            raise ValueError(f"r must be in [0, log2(w)], got {r}")
        self.params = params
        self.r = r
        self.window = 1 << r
        self.b = b
        self.cell_cap = (1 << b) - 1
        self.low_watermark = low_watermark
        self.high_watermark = high_watermark
        self.cells = np.zeros((params.d, params.w), dtype=np.uint64)
        self.state = SelectorState(h=h if h is not None else b // 2 or 1, s=s, b=b)
        self.fifo: deque[tuple[int, tuple[int, ...]]] = deque()
        self._kernels = kernels if kernels is not None else _default_kernels
        self._scan_addr = np.empty(params.w, dtype=np.int64)
        self._scan_off = np.empty((params.w, params.d), dtype=np.int64)

    def on_data(self, sketch: Sketch, key: int, inc: int = 1) -> None:
        sketch.update(key, inc)
        for i, col in enumerate(sketch.columns(key)):
            cur = int(self.cells[i, col])
            self.cells[i, col] = min(cur + inc, self.cell_cap)

    def on_data_batch(self, sketch: Sketch, cols: np.ndarray) -> None:
        k = self._kernels
        cap = np.uint64(sketch.params.cap)
        for i in range(self.params.d):
            k.saturating_add_unit(sketch.buckets[i], cols[i], cap)
            k.saturating_add_unit(self.cells[i], cols[i], np.uint64(self.cell_cap))

    def scan(self) -> int:
        """One full scan pass; queues address tuples, returns how many."""
        st = self.state
        n = self._kernels.scan_cookie(
            self.cells,
            np.uint64(st.threshold),
            self.window,
            st.s,
            self._scan_addr,
            self._scan_off,
        )
        for t in range(n):
            self.fifo.append(
                (int(self._scan_addr[t]), tuple(int(o) for o in self._scan_off[t]))
            )
        return n

    def adapt(self) -> None:
        adapt_threshold_by_queue(
            self.state, len(self.fifo), self.low_watermark, self.high_watermark
        )

    def on_int(self, sketch: Sketch, rng: np.random.Generator) -> ScatterSketchlet | None:
        """Pop the oldest queued tuple and read its buckets; None when dry."""
        if not self.fifo:
            return None
        addr, offsets = self.fifo.popleft()
        values = tuple(
            int(sketch.buckets[i, (addr + off) % self.params.w])
            for i, off in enumerate(offsets)
        )
        return _emit(addr, offsets, values, self.r)


class KChancePolicy:
    """Column baseline: k bit arrays give each column up to k sends.

    Drawing a column probes its bit in each array in order; the first
    0-bit is set and the column shipped. A fully-set column forces a
    redraw, up to retry_limit times; exhaustion ships the last drawn
    column without setting anything. Arrays are never reset.
    """

    def __init__(self, params: SketchParams, k: int = 8, retry_limit: int = 32,
                 kernels=None):
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        self.params = params
        self.k = k
        self.retry_limit = retry_limit
        self.arrays = np.zeros((k, params.w), dtype=np.bool_)
        self._kernels = kernels if kernels is not None else _default_kernels

    def on_data(self, sketch: Sketch, key: int, inc: int = 1) -> None:
        sketch.update(key, inc)

    def on_data_batch(self, sketch: Sketch, cols: np.ndarray) -> None:
        k = self._kernels
        cap = np.uint64(sketch.params.cap)
        for i in range(self.params.d):
            k.saturating_add_unit(sketch.buckets[i], cols[i], cap)

    def on_int(self, sketch: Sketch, rng: np.random.Generator) -> ColumnSketchlet:
        addr = int(rng.integers(0, self.params.w))
        for attempt in range(self.retry_limit + 1):
            unset = np.flatnonzero(~self.arrays[:, addr])
            if unset.size:
                self.arrays[int(unset[0]), addr] = True
                break
            if attempt < self.retry_limit:
                addr = int(rng.integers(0, self.params.w))
        # exhaustion ships the last drawn column without touching the arrays
        return ColumnSketchlet(addr, tuple(int(v) for v in sketch.buckets[:, addr]))
