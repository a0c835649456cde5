#!/usr/bin/env python3
"""Compare the compiled kernels against the pure-numpy fallback.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]

Times the two hot paths on realistic workloads:
  * resample_sinc: 10 s of 48 kHz audio down to the canonical 44.1 kHz
  * lag_costs: a +/-15 s lag scan over two 60 s onset envelopes
"""

import argparse
import time

import numpy as np

from soundtrail._kernels import _kernels_py
from soundtrail.dsp import FRAME_RATE

try:
    from soundtrail._kernels import _kernels_cy
except ImportError:
    _kernels_cy = None


def timeit(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_resample(repeat):
    rng = np.random.default_rng(0)
    x = np.ascontiguousarray(rng.normal(size=48000 * 10))
    table = np.ascontiguousarray(_kernels_py.resample_table(48000, 44100))
    rows = []
    rows.append(
        ("resample 10 s 48k->44.1k", "python",
         timeit(lambda: _kernels_py.resample_sinc(x, 48000, 44100, table), repeat))
    )
    if _kernels_cy is not None:
        rows.append(
            ("resample 10 s 48k->44.1k", "cython",
             timeit(lambda: _kernels_cy.resample_sinc(x, 48000.0, 44100.0, table),
                    repeat))
        )
    return rows


def bench_lag_costs(repeat):
    rng = np.random.default_rng(1)
    frames = int(60 * FRAME_RATE)
    a = np.ascontiguousarray(rng.uniform(size=frames))
    b = np.ascontiguousarray(rng.uniform(size=frames))
    max_lag = int(round(15 * FRAME_RATE))
    min_overlap = int(round(3 * FRAME_RATE))
    rows = []
    rows.append(
        ("lag scan 60 s, +/-15 s", "python",
         timeit(lambda: _kernels_py.lag_costs(a, b, max_lag, min_overlap), repeat))
    )
    if _kernels_cy is not None:
        rows.append(
            ("lag scan 60 s, +/-15 s", "cython",
             timeit(lambda: _kernels_cy.lag_costs(a, b, max_lag, min_overlap),
                    repeat))
        )
    return rows


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=3,
                        help="timing repetitions; best of N is reported")
    args = parser.parse_args()

    if _kernels_cy is None:
        print("note: compiled extension unavailable; python fallback only\n")

    all_rows = bench_resample(args.repeat) + bench_lag_costs(args.repeat)
    print(f"{'workload':<28} {'backend':<8} {'best (ms)':>10}")
    print("-" * 50)
    by_workload = {}
    for workload, backend, seconds in all_rows:
        print(f"{workload:<28} {backend:<8} {seconds * 1e3:>10.2f}")
        by_workload.setdefault(workload, {})[backend] = seconds
    print()
    for workload, times in by_workload.items():
        if "cython" in times and "python" in times:
            speedup = times["python"] / times["cython"]
            print(f"{workload}: compiled is {speedup:.1f}x the numpy fallback")


if __name__ == "__main__":
    main()
