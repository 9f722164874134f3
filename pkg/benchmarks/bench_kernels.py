"""Time the compiled and pure-Python kernel backends on the same inputs.

Usage: python3 benchmarks/bench_kernels.py [--n 20000] [--repeat 5]
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from stqa import kernels


def workloads(n: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    t = np.arange(n, dtype=np.float64) / 30.0
    cx = np.cumsum(rng.normal(0, 0.002, n)) % 1.0
    cy = np.cumsum(rng.normal(0, 0.002, n)) % 1.0
    annot = np.arange(0, n / 30.0, 1.0)
    boxes = [tuple(sorted(rng.random(2))) for _ in range(2 * min(n, 5000))]
    pairs = [(a[0], b[0], a[1], b[1]) for a, b in zip(boxes[::2], boxes[1::2])]
    tx, ty, dx, dy = (rng.random(40) for _ in range(4))
    return {
        "max_displacement": lambda: kernels.max_displacement(cx, cy),
        "speed_stats": lambda: kernels.speed_stats(t, cx, cy),
        "covers_grid": lambda: kernels.covers_grid(t, 0.0, t[-1], 1.0 / 30.0),
        "nearest_annotated": lambda: kernels.nearest_annotated(annot, t, 0.5),
        "extreme_index": lambda: kernels.extreme_index(cx, True),
        "iou (x5000 pairs)": lambda: [kernels.iou(p, q) for p, q in zip(pairs, pairs[1:])],
        "greedy_match 40x40": lambda: kernels.greedy_match(tx, ty, dx, dy, 0.3),
    }


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=20000, help="frames per synthetic track")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    backends = kernels.available_backends()
    if "cython" not in backends:
        print("compiled kernels not built; timing the Python backend only")
    jobs = workloads(args.n)
    timings: dict[str, dict[str, float]] = {}
    for name in backends:
        kernels.use_backend(name)
        for label, fn in jobs.items():
            timings.setdefault(label, {})[name] = min(timeit.repeat(fn, number=1, repeat=args.repeat))
    kernels.use_backend(backends[-1])

    print(f"{'kernel':<22}" + "".join(f"{b:>12}" for b in backends) + ("     speedup" if len(backends) > 1 else ""))
    for label, row in timings.items():
        line = f"{label:<22}" + "".join(f"{row[b] * 1e3:10.3f}ms" for b in backends)
        if len(backends) > 1:
            line += f"{row['python'] / max(row['cython'], 1e-12):11.1f}x"
        print(line)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
