#!/usr/bin/env python3
"""Compare the numba kernels against the pure-numpy fallback.

Times the individual hot kernels and a full simulation run on the same
workload with each backend. Run from the repo root:

    python benchmarks/bench_backends.py
"""

import time

import numpy as np

from sketchrelay import SimConfig, ZipfSpec, gen_zipf, run
from sketchrelay._backend import get_kernels
from sketchrelay.hashing import row_keys

FLOWS = 6000
PACKETS = 500_000
W = 2 ** 15
D = 2


def timeit(fn, repeat=5):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_kernels(kern, keys):
    rk = row_keys(7, D)
    results = {}

    results["hash_columns"] = timeit(lambda: kern.hash_columns(keys, rk, W - 1))
    cols = kern.hash_columns(keys, rk, W - 1)

    buckets = np.zeros(W, dtype=np.uint64)
    cap = np.uint64((1 << 64) - 1)
    results["saturating_add"] = timeit(
        lambda: kern.saturating_add_unit(buckets, cols[0], cap)
    )

    flags = np.zeros(W, dtype=np.bool_)
    results["set_flags"] = timeit(lambda: kern.set_flags(flags, cols[0]))

    cells = np.zeros((D, W), dtype=np.uint64)
    kern.saturating_add_unit(cells[0], cols[0], np.uint64(255))
    kern.saturating_add_unit(cells[1], cols[1], np.uint64(255))
    out_addr = np.empty(W, dtype=np.int64)
    out_off = np.empty((W, D), dtype=np.int64)
    scratch = cells.copy()

    def scan():
        scratch[:] = cells
        kern.scan_cookie(scratch, np.uint64(3), 64, 1, out_addr, out_off)

    results["scan_cookie"] = timeit(scan)
    return results


def bench_simulation(kern, trace):
    cfg = SimConfig(policy="cookie", pps=1200, seed=3, h=5)
    return timeit(lambda: run(trace, cfg, kernels=kern), repeat=3)


def main():
    backends = {}
    backends["numpy"] = get_kernels("numpy")
    try:
        backends["numba"] = get_kernels("numba")
    except ImportError:
        print("numba not installed; benchmarking the numpy fallback only")

    rng = np.random.default_rng(1)
    keys = rng.integers(0, 1 << 63, size=PACKETS, dtype=np.uint64)
    trace = gen_zipf(ZipfSpec(flows=FLOWS, packets=PACKETS, skew=1.0,
                              duration=4.0, seed=2))

    rows = {}
    for name, kern in backends.items():
        if name == "numba":  # trigger JIT before timing
            bench_kernels(kern, keys[:1000])
        rows[name] = bench_kernels(kern, keys)
        rows[name]["full_run(500k pkts)"] = bench_simulation(kern, trace)

    labels = list(next(iter(rows.values())))
    width = max(len(label) for label in labels)
    header = f"{'kernel':<{width}}" + "".join(f"{n:>12}" for n in rows)
    if len(rows) == 2:
        header += f"{'speedup':>10}"
    print(header)
    for label in labels:
        line = f"{label:<{width}}"
        for name in rows:
            line += f"{rows[name][label] * 1e3:>10.2f}ms"
        if len(rows) == 2:
            line += f"{rows['numpy'][label] / rows['numba'][label]:>9.1f}x"
        print(line)


if __name__ == "__main__":
    main()
