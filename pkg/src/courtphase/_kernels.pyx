# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops for k-means and dyad distances.

Each routine mirrors one in ``_kernels_py`` and must produce identical
floating-point results: accumulation runs in the same order (feature by
feature, point by point) and the build disables FMA contraction.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, INFINITY

cnp.import_array()


def assign_labels(const double[:, ::1] points, const double[:, ::1] centroids):
    cdef Py_ssize_t n = points.shape[0]
    cdef Py_ssize_t d = points.shape[1]
    cdef Py_ssize_t k = centroids.shape[0]
    cdef Py_ssize_t i, c, j, best_c
    cdef double s, diff, best
    labels_arr = np.empty(n, dtype=np.int64)
    d2_arr = np.empty(n, dtype=np.float64)
    cdef cnp.int64_t[::1] labels = labels_arr
    cdef double[::1] d2 = d2_arr
    with nogil:
        for i in range(n):
            best = INFINITY
            best_c = 0
            for c in range(k):
                s = 0.0
                for j in range(d):
                    diff = points[i, j] - centroids[c, j]
                    s = s + diff * diff
                if s < best:
                    best = s
                    best_c = c
            labels[i] = best_c
            d2[i] = best
    return labels_arr, d2_arr


def centroid_sums(const double[:, ::1] points, const cnp.int64_t[::1] labels, Py_ssize_t k):
    cdef Py_ssize_t n = points.shape[0]
    cdef Py_ssize_t d = points.shape[1]
    cdef Py_ssize_t i, j, c
    sums_arr = np.zeros((k, d), dtype=np.float64)
    counts_arr = np.zeros(k, dtype=np.int64)
    cdef double[:, ::1] sums = sums_arr
    cdef cnp.int64_t[::1] counts = counts_arr
    with nogil:
        for i in range(n):
            c = labels[i]
            counts[c] += 1
            for j in range(d):
                sums[c, j] = sums[c, j] + points[i, j]
    return sums_arr, counts_arr


def dyad_distances(const double[:, :, ::1] positions):
    cdef Py_ssize_t n = positions.shape[0]
    cdef Py_ssize_t m = positions.shape[1]
    cdef Py_ssize_t f, a, b, col
    cdef double dx, dy
    out_arr = np.empty((n, m * (m - 1) // 2), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    with nogil:
        for f in range(n):
            col = 0
            for a in range(m):
                for b in range(a + 1, m):
                    dx = positions[f, a, 0] - positions[f, b, 0]
                    dy = positions[f, a, 1] - positions[f, b, 1]
                    out[f, col] = sqrt(dx * dx + dy * dy)
                    col += 1
    return out_arr


def hartigan_pass(
    const double[:, ::1] points,
    double[:, ::1] centroids,
    cnp.int64_t[::1] counts,
    cnp.int64_t[::1] labels,
):
    """One single-point-transfer sweep; updates arguments in place, returns moves.

    Points are screened against the centroids as they stand at sweep start;
    each flagged point is then re-checked against the live centroids and
    moved to cluster b if n_b/(n_b+1)*|x-c_b|^2 < n_a/(n_a-1)*|x-c_a|^2.
    """
    cdef Py_ssize_t n = points.shape[0]
    cdef Py_ssize_t d = points.shape[1]
    cdef Py_ssize_t k = centroids.shape[0]
    cdef Py_ssize_t i, c, j, a, b
    cdef double s, diff, da, db, best, na, nb
    cdef Py_ssize_t moved = 0
    flag_arr = np.zeros(n, dtype=np.uint8)
    cdef cnp.uint8_t[::1] flag = flag_arr
    with nogil:
        for i in range(n):
            a = labels[i]
            if counts[a] <= 1:
                continue
            best = INFINITY
            da = 0.0
            for c in range(k):
                s = 0.0
                for j in range(d):
                    diff = points[i, j] - centroids[c, j]
                    s = s + diff * diff
                if c == a:
                    da = (<double>counts[c] / (<double>counts[c] - 1.0)) * s
                else:
                    db = (<double>counts[c] / (<double>counts[c] + 1.0)) * s
                    if db < best:
                        best = db
            if best < da:
                flag[i] = 1
        for i in range(n):
            if not flag[i]:
                continue
            a = labels[i]
            if counts[a] <= 1:
                continue
            best = INFINITY
            b = -1
            da = 0.0
            for c in range(k):
                s = 0.0
                for j in range(d):
                    diff = points[i, j] - centroids[c, j]
                    s = s + diff * diff
                if c == a:
                    da = (<double>counts[c] / (<double>counts[c] - 1.0)) * s
                else:
                    db = (<double>counts[c] / (<double>counts[c] + 1.0)) * s
                    if db < best:
                        best = db
                        b = c
            if b >= 0 and best < da:
                na = <double>counts[a]
                nb = <double>counts[b]
                for j in range(d):
                    centroids[a, j] = (centroids[a, j] * na - points[i, j]) / (na - 1.0)
                    centroids[b, j] = (centroids[b, j] * nb + points[i, j]) / (nb + 1.0)
                counts[a] -= 1
                counts[b] += 1
                labels[i] = b
                moved += 1
    return moved
