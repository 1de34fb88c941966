"""k-means over dyad vectors, BD/TD deviance ratio, and increment-based k choice.

Random streams: restart ``r`` of a k-cluster run seeded with ``seed`` draws
from ``numpy.random.Generator(Philox(SeedSequence([seed, k, r])))``. The k
enters the derivation so curve entries are independent of which other k
values were evaluated, and ``kmeans(points, k, seed)`` run alone reproduces
the corresponding curve entry exactly.
"""
from __future__ import annotations

import json
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _backend
from .errors import ConfigError, InfeasibleError

DEFAULT_RESTARTS = 20
DEFAULT_MAX_ITER = 300
DEFAULT_TOL = 1e-6
DEFAULT_THRESHOLD = 0.10
MONOTONE_TOL = 1e-9


class SelectionWarning(UserWarning):
    pass


@dataclass
class ClusterModel:
    k: int
    centroids: np.ndarray
    assignments: np.ndarray
    wcss: float
    tss: float
    bd_td: float
    seed: int
    restarts: int
    n_iter: int = 0
    converged: bool = True

    def cluster_sizes(self) -> np.ndarray:
        return np.bincount(self.assignments, minlength=self.k)


@dataclass
class KSelectionCurve:
    entries: list[tuple[int, float]]
    chosen_k: int | None = None
    threshold: float | None = None
    models: dict[int, ClusterModel] = field(default_factory=dict, repr=False)

    def increments(self) -> list[tuple[int, float]]:
        return [(k0, b1 - b0) for (k0, b0), (_, b1) in zip(self.entries, self.entries[1:])]


def _as_points(points) -> np.ndarray:
    if hasattr(points, "distances"):
        points = points.distances
    elif len(points) and hasattr(points[0], "distances"):
        points = [p.distances for p in points]
    arr = np.ascontiguousarray(points, dtype=np.float64)
    if arr.ndim != 2:
        raise ConfigError("points must be a 2-D array (n_points, n_features)", module="cluster")
    return arr


def n_distinct(points) -> int:
    arr = _as_points(points)
    return int(np.unique(arr, axis=0).shape[0]) if arr.size else 0


def within_ss(points: np.ndarray, centroids: np.ndarray, labels: np.ndarray) -> float:
    diff = points - centroids[labels]
    return float(np.sum(diff * diff))


def _means(points: np.ndarray, labels: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    sums, counts = _backend.centroid_sums(points, labels, k)
    return sums / np.maximum(counts, 1)[:, None], counts


def total_ss(points) -> float:
    """Total deviance; computed exactly as a one-cluster WCSS."""
    arr = _as_points(points)
    labels = np.zeros(arr.shape[0], dtype=np.int64)
    mean, _ = _means(arr, labels, 1)
    return within_ss(arr, mean, labels)


def between_ss(points, labels, k: int) -> float:
    arr = _as_points(points)
    grand = arr.mean(axis=0)
    total = 0.0
    for c in range(k):
        members = arr[labels == c]
        if len(members):
            diff = members.mean(axis=0) - grand
            total += len(members) * float(diff @ diff)
    return total


def _plusplus(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    chosen = [int(rng.integers(n))]
    _, d2 = _backend.assign_labels(points, points[chosen])
    for _ in range(1, k):
        cum = np.cumsum(d2)
        total = cum[-1]
        if total <= 0.0:
            # only reachable with fewer distinct points than k; caller guards
            raise InfeasibleError("k-means++ ran out of distinct points", module="cluster")
        idx = int(np.searchsorted(cum, rng.random() * total, side="right"))
        idx = min(idx, n - 1)
        while d2[idx] == 0.0:
            idx -= 1
        chosen.append(idx)
        _, d_new = _backend.assign_labels(points, points[idx : idx + 1])
        d2 = np.minimum(d2, d_new)
    return points[chosen].copy()


def _repair_empty(points, labels, d2, counts, k) -> bool:
    """Move the point farthest from its centroid into each empty cluster."""
    repaired = False
    for c in np.flatnonzero(counts == 0):
        movable = counts[labels] > 1
        cand = np.where(movable, d2, -1.0)
        p = int(np.argmax(cand))
        if cand[p] <= 0.0:
            raise InfeasibleError("cannot repair empty cluster: too few distinct points", module="cluster")
        counts[labels[p]] -= 1
        labels[p] = c
        counts[c] = 1
        d2[p] = 0.0
        repaired = True
    return repaired


def _lloyd(points, centroids, max_iter, tol):
    k = centroids.shape[0]
    labels, d2 = _backend.assign_labels(points, centroids)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        counts = np.bincount(labels, minlength=k)
        _repair_empty(points, labels, d2, counts, k)
        new_c, _ = _means(points, labels, k)
        shift = float(np.sqrt(np.max(np.sum((new_c - centroids) ** 2, axis=1))))
        centroids = new_c
        new_labels, d2 = _backend.assign_labels(points, centroids)
        if np.array_equal(new_labels, labels):
            converged = True
            break
        labels = new_labels
        if shift < tol:
            converged = True
            break
    counts = np.bincount(labels, minlength=k)
    while _repair_empty(points, labels, d2, counts, k):
        counts = np.bincount(labels, minlength=k)
    centroids, _ = _means(points, labels, k)
    return centroids, labels, within_ss(points, centroids, labels), it, converged


def _refine(points, centroids, labels, max_sweeps, max_iter, tol):
    """Hartigan single-point transfers from a Lloyd solution, then re-settle."""
    k = centroids.shape[0]
    centroids = np.ascontiguousarray(centroids)
    labels = np.ascontiguousarray(labels, dtype=np.int64).copy()
    counts = np.bincount(labels, minlength=k).astype(np.int64)
    for _ in range(max_sweeps):
        if _backend.hartigan_pass(points, centroids, counts, labels) == 0:
            break
    centroids, _ = _means(points, labels, k)
    return _lloyd(points, centroids, max_iter, tol)


def kmeans(
    points,
    k: int,
    seed: int = 0,
    restarts: int = DEFAULT_RESTARTS,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
    n_jobs: int = 1,
) -> ClusterModel:
    """Best-of-``restarts`` k-means with k-means++ seeding.

    Each restart runs Lloyd iterations to a fixed point, then single-point
    (Hartigan) transfers, which only ever lower WCSS and escape many Lloyd
    fixed points that are not local optima, then Lloyd again to settle.

    The lowest-WCSS restart wins; ties go to the lowest restart index, so
    ``n_jobs > 1`` returns exactly what a serial run does.
    """
    arr = _as_points(points)
    if k <= 0:
        raise ConfigError(f"k must be positive, got {k}", module="cluster")
    if restarts < 1:
        raise ConfigError("restarts must be >= 1", module="cluster")
    if seed < 0:
        raise ConfigError("seed must be non-negative", module="cluster")
    distinct = n_distinct(arr)
    if k > distinct:
        raise InfeasibleError(f"k={k} exceeds the {distinct} distinct points", module="cluster")

    def run(r: int):
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, k, r])))
        centroids, labels, _, n_iter, _ = _lloyd(arr, _plusplus(arr, k, rng), max_iter, tol)
        centroids, labels, wcss, extra, converged = _refine(arr, centroids, labels, max_iter, max_iter, tol)
        return centroids, labels, wcss, n_iter + extra, converged

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(run, range(restarts)))
    else:
        results = [run(r) for r in range(restarts)]
    best = min(range(restarts), key=lambda r: (results[r][2], r))
    centroids, labels, wcss, n_iter, converged = results[best]
    tss = total_ss(arr)
    bd_td = 0.0 if tss == 0.0 else min(1.0, max(0.0, 1.0 - wcss / tss))
    return ClusterModel(k, centroids, labels, wcss, tss, bd_td, seed, restarts, n_iter, converged)


def bd_td_curve(
    points,
    k_min: int,
    k_max: int,
    seed: int = 0,
    restarts: int = DEFAULT_RESTARTS,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
    n_jobs: int = 1,
) -> KSelectionCurve:
    arr = _as_points(points)
    if not 1 <= k_min < k_max:
        raise ConfigError(f"need 1 <= k_min < k_max, got {k_min}, {k_max}", module="cluster")
    models = {
        k: kmeans(arr, k, seed, restarts, max_iter, tol, n_jobs) for k in range(k_min, k_max + 1)
    }
    return KSelectionCurve([(k, m.bd_td) for k, m in models.items()], models=models)


def select_k(entries: Sequence[tuple[int, float]] | KSelectionCurve, threshold: float = DEFAULT_THRESHOLD) -> int:
    """Smallest k whose forward BD/TD increment falls below ``threshold``."""
    if isinstance(entries, KSelectionCurve):
        entries = entries.entries
    entries = sorted((int(k), float(v)) for k, v in entries)
    if len(entries) < 2:
        raise ConfigError("select_k needs at least two curve entries", module="cluster")
    incs = [(k0, b1 - b0) for (k0, b0), (_, b1) in zip(entries, entries[1:])]
    if any(inc < -MONOTONE_TOL for _, inc in incs):
        warnings.warn("BD/TD curve is not monotone; consider more restarts", SelectionWarning, stacklevel=2)
    for k, inc in incs:
        if inc < threshold:
            return k
    warnings.warn(
        f"every BD/TD increment is >= {threshold}; returning k_max={entries[-1][0]}",
        SelectionWarning,
        stacklevel=2,
    )
    return entries[-1][0]


def model_to_json(
    model: ClusterModel, frame_ms: np.ndarray, curve: KSelectionCurve | None = None
) -> dict:
    doc = {
        "k": model.k,
        "seed": model.seed,
        "restarts": model.restarts,
        "wcss": model.wcss,
        "tss": model.tss,
        "bd_td": model.bd_td,
        "centroids": model.centroids.tolist(),
        "cluster_sizes": model.cluster_sizes().tolist(),
    }
    if curve is not None:
        doc["curve"] = [{"k": k, "bd_td": v} for k, v in curve.entries]
        doc["chosen_k"] = curve.chosen_k
        doc["threshold"] = curve.threshold
    doc["assignments"] = {str(int(t)): int(c) for t, c in zip(frame_ms, model.assignments)}
    return doc


def load_assignments(doc: dict) -> tuple[np.ndarray, np.ndarray]:
    """(frame_ms, cluster ids) from a model JSON document, sorted by time."""
    items = sorted((int(t), int(c)) for t, c in doc["assignments"].items())
    return np.array([t for t, _ in items], dtype=np.int64), np.array([c for _, c in items], dtype=np.int64)


def dump_json(doc: dict, stream) -> None:
    json.dump(doc, stream, indent=1, sort_keys=False)
    stream.write("\n")
