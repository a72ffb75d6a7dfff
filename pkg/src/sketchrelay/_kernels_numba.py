"""Numba-compiled replay kernels.

Same contract as _kernels_numpy; importing this module requires numba.
All value arithmetic is kept in uint64 (numba promotes mixed
uint64/int64 math to float64, which would corrupt counters).
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .hashing import _MIX1, _MIX2

NAME = "numba"

_U1 = np.uint64(1)
_U33 = np.uint64(33)
_M1 = np.uint64(_MIX1)
_M2 = np.uint64(_MIX2)


@njit(cache=True)
def hash_columns(keys, rkeys, mask):
    n = keys.shape[0]
    d = rkeys.shape[0]
    out = np.empty((d, n), dtype=np.int64)
    m = np.uint64(mask)
    for i in range(d):
        rk = rkeys[i]
        for t in range(n):
            x = keys[t] ^ rk
            x ^= x >> _U33
            x *= _M1
            x ^= x >> _U33
            x *= _M2
            x ^= x >> _U33
            out[i, t] = np.int64(x & m)
    return out


@njit(cache=True)
def saturating_add_unit(row, cols, cap):
    c = np.uint64(cap)
    for t in range(cols.shape[0]):
        v = row[cols[t]]
        if v < c:
            row[cols[t]] = v + _U1


@njit(cache=True)
def set_flags(flags, cols):
    for t in range(cols.shape[0]):
        flags[cols[t]] = True


@njit(cache=True)
def scan_cookie(cells, threshold, window, shift, out_addr, out_off):
    # Literal transcription of the proactive scan: anchor the first
    # qualifying cell, fill remaining rows inside the window, emit and
    # right-shift on completion, rebase the window on overflow.
    d, w = cells.shape
    thr = np.uint64(threshold)
    sh = np.uint64(shift)
    n = 0
    addr = np.int64(-1)
    off = np.full(d, -1, dtype=np.int64)
    for i in range(w):
        if addr >= 0:
            all_set = True
            for j in range(d):
                if off[j] < 0:
                    all_set = False
                    break
            if all_set:
                out_addr[n] = addr
                for j in range(d):
                    out_off[n, j] = off[j]
                    col = addr + off[j]
                    cells[j, col] = cells[j, col] >> sh
                n += 1
                addr = np.int64(-1)
                for j in range(d):
                    off[j] = -1
            elif i - addr >= window:
                o = np.int64(w)
                for j in range(d):
                    if 0 <= off[j] < o:
                        o = off[j]
                addr = addr + o
                for j in range(d):
                    if off[j] >= 0:
                        off[j] = off[j] - o
                        if off[j] < 0:
                            off[j] = -1
        for j in range(d):
            if cells[j, i] >= thr:
                if addr < 0:
                    addr = np.int64(i)
                    off[j] = 0
                elif i < addr + window and off[j] < 0:
                    off[j] = i - addr
    return n
