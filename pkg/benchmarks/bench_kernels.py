#!/usr/bin/env python3
"""Throughput comparison of the PCM kernel backends.

Runs decode, encode and crossfade workloads against both the compiled
extension and the numpy fallback, checks they produce identical bytes,
and prints best-of-N megasamples per second for each.
"""

from __future__ import annotations

import argparse
import importlib
import time

import numpy as np

from mgakit.kernels import equal_power_gains


def load_backends() -> list:
    backends = [importlib.import_module("mgakit.kernels._pcm_numpy")]
    try:
        backends.insert(
            0, importlib.import_module("mgakit.kernels._pcm_cython")
        )
    except ImportError:
        print("compiled extension not built; benchmarking the fallback only")
    return backends


def best_of(repeats: int, fn) -> float:
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seconds", type=int, default=30,
                        help="buffer length in seconds (default 30)")
    parser.add_argument("--rate", type=int, default=48000)
    parser.add_argument("--channels", type=int, default=2)
    parser.add_argument("--repeats", type=int, default=5,
                        help="take the best of N runs (default 5)")
    args = parser.parse_args()

    samples = args.seconds * args.rate * args.channels
    rng = np.random.default_rng(0)
    floats = rng.uniform(-0.9, 0.9, size=samples)
    backends = load_backends()
    pcm16 = backends[-1].encode(floats, 16)
    pcm24 = backends[-1].encode(floats, 24)

    fade_frames = 480
    tail = rng.uniform(-0.9, 0.9, size=(fade_frames, args.channels))
    head = rng.uniform(-0.9, 0.9, size=(fade_frames, args.channels))
    fade_out, fade_in = equal_power_gains(fade_frames)

    workloads = [
        ("decode 16-bit", samples, lambda b: b.decode(pcm16, 16)),
        ("decode 24-bit", samples, lambda b: b.decode(pcm24, 24)),
        ("encode 16-bit", samples, lambda b: b.encode(floats, 16)),
        ("encode 24-bit", samples, lambda b: b.encode(floats, 24)),
        ("crossfade x1000", fade_frames * args.channels * 1000,
         lambda b: [b.crossfade(tail, head, fade_out, fade_in)
                    for _ in range(1000)]),
    ]

    # backends must agree bit for bit before timing means anything
    for name, _, run in workloads:
        outputs = {bytes(np.asarray(run(b)).data) if not isinstance(run(b), bytes)
                   else run(b) for b in backends}
        if len(outputs) != 1:
            raise SystemExit(f"backend outputs differ for {name!r}")

    names = [b.NAME for b in backends]
    header = f"{'workload':<16}" + "".join(f"{n + ' Ms/s':>14}" for n in names)
    if len(backends) == 2:
        header += f"{'speedup':>9}"
    print(header)
    for name, units, run in workloads:
        rates = [units / best_of(args.repeats, lambda b=b: run(b)) / 1e6
                 for b in backends]
        line = f"{name:<16}" + "".join(f"{r:>14.1f}" for r in rates)
        if len(rates) == 2:
            line += f"{rates[0] / rates[1]:>8.2f}x"
        print(line)


if __name__ == "__main__":
    main()
