#!/usr/bin/env python3
"""Throughput comparison of the streaming-loop backends.

Runs the kernel RLS and LMS equalizer loops over a synthetic distorted
16-QAM stream for every importable backend and prints per-symbol cost.

    python3 benchmarks/bench_backends.py [--symbols N] [--window M]
"""

import argparse
import time

import numpy as np

from fopaeq.dsp import qam16
from fopaeq.kernels import BACKEND, available_backends


def synthetic_stream(n, seed=0, snr_db=24.0):
    rng = np.random.default_rng(seed)
    const = qam16()
    sym = const.points[rng.integers(0, 16, n)]
    wobble = 0.12 * np.sin(2 * np.pi * np.arange(n) / 10.37)
    amp = 1.0 + 0.08 * np.sin(2 * np.pi * np.arange(n) / 28.0)
    noise = 10 ** (-snr_db / 20) / np.sqrt(2) * (
        rng.normal(size=n) + 1j * rng.normal(size=n)
    )
    r = amp * np.exp(1j * wobble) * sym + noise
    return r / np.sqrt(np.mean(np.abs(r) ** 2)), sym, const


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--symbols", type=int, default=65536)
    ap.add_argument("--window", type=int, default=50)
    ap.add_argument("--block", type=int, default=20)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()

    r, sym, const = synthetic_stream(args.symbols)
    n_train = min(2000, args.symbols)
    backends = available_backends()
    print(f"active backend: {BACKEND}; candidates: {', '.join(backends)}")
    print(f"{args.symbols} symbols, window M={args.window}, block L={args.block}\n")
    print(f"{'backend':>8s} {'loop':>8s} {'total [s]':>10s} {'us/symbol':>10s} {'speedup':>8s}")

    baseline = {}
    for name, mod in backends.items():
        for loop, runner in (
            ("swkrls", lambda m: m.swkrls_equalize(
                r, sym, n_train, const.points, args.window, args.block,
                10**0.5, 0.1)),
            ("lms", lambda m: m.lms_equalize(r, sym, n_train, const.points, 0.01)),
        ):
            best = min(
                _timed(runner, mod) for _ in range(args.repeats)
            )
            key = loop
            baseline.setdefault(key, best)
            speedup = baseline[key] / best
            print(f"{name:>8s} {loop:>8s} {best:10.3f} "
                  f"{1e6 * best / args.symbols:10.2f} {speedup:7.1f}x")


def _timed(fn, mod):
    t0 = time.perf_counter()
    fn(mod)
    return time.perf_counter() - t0


if __name__ == "__main__":
    main()
