"""Pure-numpy implementations of the hot replay kernels.

Fallback path for environments without numba; selected with
SKETCHRELAY_BACKEND=numpy. Every function here must produce results
bit-identical to its counterpart in _kernels_numba (the test suite
asserts this), so all counter arithmetic stays in uint64.
"""

from __future__ import annotations

import numpy as np

from .hashing import _MIX1, _MIX2

NAME = "numpy"

_U33 = np.uint64(33)
_M1 = np.uint64(_MIX1)
_M2 = np.uint64(_MIX2)


def hash_columns(keys: np.ndarray, rkeys: np.ndarray, mask: int) -> np.ndarray:
    """Column indices for each (row, key) pair.

    keys: uint64[n], rkeys: uint64[d] per-row hash keys, mask: w-1.
    Returns int64[d, n].
    """
    n = keys.shape[0]
    d = rkeys.shape[0]
    out = np.empty((d, n), dtype=np.int64)
    m = np.uint64(mask)
    for i in range(d):
        x = keys ^ rkeys[i]
        x ^= x >> _U33
        x *= _M1
        x ^= x >> _U33
        x *= _M2
        x ^= x >> _U33
        out[i] = (x & m).astype(np.int64)
    return out


def saturating_add_unit(row: np.ndarray, cols: np.ndarray, cap: int) -> None:
    """Add 1 to row[c] for every c in cols, saturating at cap.

    Unit increments commute, so the batch result equals processing the
    events one at a time: min(value + count, cap), computed overflow-safe
    via headroom since cap may be the uint64 maximum.
    """
    if cols.size == 0:
        return
    uniq, counts = np.unique(cols, return_counts=True)
    cur = row[uniq]
    headroom = np.uint64(cap) - cur
    add = np.minimum(counts.astype(np.uint64), headroom)
    row[uniq] = cur + add


def set_flags(flags: np.ndarray, cols: np.ndarray) -> None:
    """Set flags[c] = True for every c in cols."""
    flags[cols] = True


def scan_cookie(
    cells: np.ndarray,
    threshold: int,
    window: int,
    shift: int,
    out_addr: np.ndarray,
    out_off: np.ndarray,
) -> int:
    """One full left-to-right selection pass over a freshness counter array.

    Walks columns accumulating an (addr, offset[0..d-1]) tuple: the first
    qualifying cell (>= threshold) anchors addr, later rows fill their
    offset when they qualify inside [addr, addr+window-1]. A finished
    tuple is emitted and its d cells right-shifted. Tuples completed on
    the final column are dropped, as are windows that run off the end of
    the pass; both mirror the packet-driven selector's reset-per-pass
    behavior.

    Only iterates columns where some row qualifies. The skipped
    window-overflow rebase is provably a no-op: the anchor row's offset
    is always 0, so the rebase distance min(offsets) is always 0 (the
    compiled kernel implements it literally and the suite checks
    equivalence).

    Mutates cells. Fills out_addr[int64[>=w]] / out_off[int64[>=w, d]]
    and returns the number of tuples emitted.
    """
    d, w = cells.shape
    thr = np.uint64(threshold)
    sh = np.uint64(shift)
    qual = cells >= thr
    cols = np.flatnonzero(qual.any(axis=0))
    n = 0
    addr = -1
    off = np.full(d, -1, dtype=np.int64)
    nset = 0
    for i in cols:
        for j in range(d):
            if qual[j, i]:
                if addr < 0:
                    addr = i
                    off[j] = 0
                    nset = 1
                elif i < addr + window and off[j] < 0:
                    off[j] = i - addr
                    nset += 1
        if addr >= 0 and nset == d and i <= w - 2:
            out_addr[n] = addr
            for j in range(d):
                out_off[n, j] = off[j]
                col = addr + off[j]
                cells[j, col] = cells[j, col] >> sh
            n += 1
            addr = -1
            off[:] = -1
            nset = 0
    return n
