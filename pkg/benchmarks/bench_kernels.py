"""Compiled vs numpy-fallback kernel timings, plus a full kmeans fit.

Run: python benchmarks/bench_kernels.py [--frames N] [--repeat R]
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from courtphase import _kernels_py, cluster
from courtphase import _backend

try:
    from courtphase import _kernels as _compiled
except ImportError:  # pragma: no cover
    _compiled = None


def _inputs(n_frames: int, k: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    positions = rng.uniform(-1400, 1400, size=(n_frames, 5, 2))
    points = np.ascontiguousarray(_kernels_py.dyad_distances(positions))
    centroids = points[rng.choice(n_frames, k, replace=False)].copy()
    labels, _ = _kernels_py.assign_labels(points, centroids)
    return positions, points, centroids, labels


def _time(fn, repeat: int) -> float:
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def bench_kernels(n_frames: int, k: int, repeat: int) -> list[tuple[str, float, float | None]]:
    positions, points, centroids, labels = _inputs(n_frames, k)
    rows = []
    cases = {
        "dyad_distances": lambda m: m.dyad_distances(positions),
        "assign_labels": lambda m: m.assign_labels(points, centroids),
        "centroid_sums": lambda m: m.centroid_sums(points, labels, k),
    }

    def hartigan(m):
        sums, counts = _kernels_py.centroid_sums(points, labels, k)
        c = np.ascontiguousarray(sums / counts[:, None])
        m.hartigan_pass(points, c, counts, labels.copy())

    cases["hartigan_pass"] = hartigan
    for name, fn in cases.items():
        py = _time(lambda: fn(_kernels_py), repeat)
        comp = _time(lambda: fn(_compiled), repeat) if _compiled is not None else None
        rows.append((name, py, comp))
    return rows


def bench_kmeans(n_frames: int, k: int, restarts: int) -> list[tuple[str, float, float | None]]:
    _, points, _, _ = _inputs(n_frames, k, seed=1)
    out = {}
    for label, impl in (("python", _kernels_py), ("compiled", _compiled)):
        if impl is None:
            out[label] = None
            continue
        _backend._impl = impl
        out[label] = _time(lambda: cluster.kmeans(points, k, seed=0, restarts=restarts), 1)
    _backend._impl = _compiled if _compiled is not None else _kernels_py
    return [(f"kmeans k={k} restarts={restarts}", out["python"], out["compiled"])]


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--frames", type=int, default=12_000)
    ap.add_argument("--k", type=int, default=6)
    ap.add_argument("--restarts", type=int, default=5)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    rows = bench_kernels(args.frames, args.k, args.repeat) + bench_kmeans(args.frames, args.k, args.restarts)
    print(f"{args.frames} frames, k={args.k}")
    print(f"{'kernel':<32}{'python s':>12}{'compiled s':>12}{'speedup':>10}")
    for name, py, comp in rows:
        if comp is None:
            print(f"{name:<32}{py:>12.4f}{'n/a':>12}{'':>10}")
        else:
            print(f"{name:<32}{py:>12.4f}{comp:>12.4f}{py / comp:>9.1f}x")


if __name__ == "__main__":
    main()
