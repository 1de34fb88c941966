"""Kernel backend selection.

The compiled ``_kernels`` extension is used when importable; otherwise (or
when ``COURTPHASE_PURE_PYTHON`` is set to a non-empty value other than
``0``) the numpy fallback is used. ``BACKEND`` names the active choice.
"""
from __future__ import annotations

import os

import numpy as np

from . import _kernels_py

_force_pure = os.environ.get("COURTPHASE_PURE_PYTHON", "") not in ("", "0")

if _force_pure:
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined, no-redef]
        BACKEND = "compiled"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"


def assign_labels(points, centroids):
    """Nearest-centroid labels and squared distances (lowest index wins ties)."""
    return _impl.assign_labels(
        np.ascontiguousarray(points, dtype=np.float64),
        np.ascontiguousarray(centroids, dtype=np.float64),
    )


def centroid_sums(points, labels, k: int):
    """Per-cluster coordinate sums and member counts."""
    return _impl.centroid_sums(
        np.ascontiguousarray(points, dtype=np.float64),
        np.ascontiguousarray(labels, dtype=np.int64),
        int(k),
    )


def dyad_distances(positions):
    """Pairwise x-y distances per frame, pairs (i, j), i < j, row-major."""
    return _impl.dyad_distances(np.ascontiguousarray(positions, dtype=np.float64))


def hartigan_pass(points, centroids, counts, labels) -> int:
    """Single-point-transfer sweep; mutates centroids, counts and labels in place.

    All three mutable arrays must already be C-contiguous float64/int64.
    """
    return int(_impl.hartigan_pass(np.ascontiguousarray(points, dtype=np.float64), centroids, counts, labels))
