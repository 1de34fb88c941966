"""Pure-numpy versions of the compiled kernels.

Summation order matches ``_kernels.pyx`` so both backends agree exactly.
"""
from __future__ import annotations

import numpy as np


def assign_labels(points: np.ndarray, centroids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n, d = points.shape
    acc = np.zeros((n, centroids.shape[0]))
    for j in range(d):
        diff = points[:, j, None] - centroids[None, :, j]
        acc += diff * diff
    # argmin returns the first minimum, i.e. the lowest cluster index on ties
    labels = np.argmin(acc, axis=1).astype(np.int64)
    return labels, acc[np.arange(n), labels]


def centroid_sums(points: np.ndarray, labels: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    sums = np.zeros((k, points.shape[1]))
    np.add.at(sums, labels, points)
    counts = np.bincount(labels, minlength=k).astype(np.int64)
    return sums, counts


def dyad_distances(positions: np.ndarray) -> np.ndarray:
    m = positions.shape[1]
    a, b = np.triu_indices(m, k=1)
    dx = positions[:, a, 0] - positions[:, b, 0]
    dy = positions[:, a, 1] - positions[:, b, 1]
    return np.ascontiguousarray(np.sqrt(dx * dx + dy * dy))


def _sq_dists(x: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    acc = np.zeros(centroids.shape[0])
    for j in range(x.shape[0]):
        diff = x[j] - centroids[:, j]
        acc += diff * diff
    return acc


def hartigan_pass(points, centroids, counts, labels) -> int:
    n, d = points.shape
    k = centroids.shape[0]
    acc = np.zeros((n, k))
    for j in range(d):
        diff = points[:, j, None] - centroids[None, :, j]
        acc += diff * diff
    cnt = counts.astype(np.float64)
    rows = np.arange(n)
    with np.errstate(divide="ignore", invalid="ignore"):
        da = (cnt / (cnt - 1.0))[labels] * acc[rows, labels]
    db = (cnt / (cnt + 1.0))[None, :] * acc
    db[rows, labels] = np.inf
    flagged = np.flatnonzero((counts[labels] > 1) & (db.min(axis=1) < da))

    moved = 0
    for i in flagged:
        a = labels[i]
        if counts[a] <= 1:
            continue
        s = _sq_dists(points[i], centroids)
        cnt = counts.astype(np.float64)
        cost_a = (cnt[a] / (cnt[a] - 1.0)) * s[a]
        gains = (cnt / (cnt + 1.0)) * s
        gains[a] = np.inf
        b = int(np.argmin(gains))
        if gains[b] < cost_a:
            na, nb = cnt[a], cnt[b]
            centroids[a] = (centroids[a] * na - points[i]) / (na - 1.0)
            centroids[b] = (centroids[b] * nb + points[i]) / (nb + 1.0)
            counts[a] -= 1
            counts[b] += 1
            labels[i] = b
            moved += 1
    return moved
