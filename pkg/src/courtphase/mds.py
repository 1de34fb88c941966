"""Per-cluster mean dyad-distance matrices and classical (Torgerson) MDS."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError

JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100


@dataclass
class MeanDistanceMatrix:
    cluster_id: int | None
    matrix: np.ndarray
    n_frames: int

    def off_diagonal_mean(self) -> float:
        m = self.matrix.shape[0]
        iu = np.triu_indices(m, k=1)
        return float(self.matrix[iu].mean()) if m > 1 else 0.0

    def dyads(self) -> np.ndarray:
        return self.matrix[np.triu_indices(self.matrix.shape[0], k=1)]


@dataclass
class MdsEmbedding:
    cluster_id: int | None
    coords: np.ndarray
    eigenvalues: np.ndarray
    strain_share: float

    def spread(self) -> float:
        """Largest pairwise distance between embedded points."""
        diff = self.coords[:, None, :] - self.coords[None, :, :]
        return float(np.sqrt((diff**2).sum(-1)).max())


def _square(dyads: np.ndarray, size: int) -> np.ndarray:
    out = np.zeros((size, size))
    for col, (i, j) in enumerate(itertools.combinations(range(size), 2)):
        out[i, j] = out[j, i] = dyads[col]
    return out


def _lineup_size(n_dyads: int) -> int:
    size = int(round((1 + math.sqrt(1 + 8 * n_dyads)) / 2))
    if size * (size - 1) // 2 != n_dyads:
        raise DataError(f"{n_dyads} columns is not a dyad count", module="mds")
    return size


def mean_distance_matrix(assignments, features, cluster_id: int | None) -> MeanDistanceMatrix:
    """Mean dyad distances over the frames assigned to ``cluster_id``.

    ``cluster_id=None`` averages over every frame, giving the whole-stint
    reference used by profile plots.
    """
    dist = getattr(features, "distances", features)
    dist = np.asarray(dist, dtype=np.float64)
    labels = np.asarray(assignments)
    rows = dist if cluster_id is None else dist[labels == cluster_id]
    if rows.shape[0] == 0:
        raise DataError(f"cluster {cluster_id} has no frames", module="mds")
    size = _lineup_size(dist.shape[1])
    return MeanDistanceMatrix(cluster_id, _square(rows.mean(axis=0), size), int(rows.shape[0]))


def jacobi_eigh(a: np.ndarray, tol: float = JACOBI_TOL, max_sweeps: int = JACOBI_MAX_SWEEPS):
    """Cyclic Jacobi eigendecomposition of a small symmetric matrix.

    Returns (eigenvalues, eigenvectors-as-columns) sorted by descending
    eigenvalue. Sweeps stop once the off-diagonal Frobenius norm falls
    below ``tol`` times the matrix norm.
    """
    a = np.array(a, dtype=np.float64)
    n = a.shape[0]
    v = np.eye(n)
    scale = max(np.linalg.norm(a), 1e-300)
    for _ in range(max_sweeps):
        # summed directly: subtracting the diagonal mass from the total cancels badly
        off = math.sqrt(float(np.sum(a * a, where=~np.eye(n, dtype=bool))))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                # A <- J^T A J with the rotation in the (p, q) plane
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    evals = np.diag(a).copy()
    order = np.argsort(-evals, kind="stable")
    return evals[order], v[:, order]


def classical_mds(d, dims: int = 2) -> MdsEmbedding:
    matrix = d.matrix if isinstance(d, MeanDistanceMatrix) else np.asarray(d, dtype=np.float64)
    cluster_id = d.cluster_id if isinstance(d, MeanDistanceMatrix) else None
    n = matrix.shape[0]
    if matrix.ndim != 2 or matrix.shape[1] != n:
        raise ConfigError("distance matrix must be square", module="mds")
    scale = max(float(np.abs(matrix).max(initial=0.0)), 1.0)
    if not np.allclose(matrix, matrix.T, rtol=0, atol=1e-9 * scale):
        raise ConfigError("distance matrix must be symmetric", module="mds")
    if (matrix < 0).any():
        raise ConfigError("distance matrix has negative entries", module="mds")
    if np.abs(np.diag(matrix)).max(initial=0.0) > 1e-9 * scale:
        raise ConfigError("distance matrix must have a zero diagonal", module="mds")
    if dims < 1 or dims > n:
        raise ConfigError(f"dims must be within 1..{n}", module="mds")

    centering = np.eye(n) - np.full((n, n), 1.0 / n)
    b = -0.5 * centering @ (matrix**2) @ centering
    b = 0.5 * (b + b.T)
    evals, evecs = jacobi_eigh(b)
    evals = np.maximum(evals, 0.0)
    kept = evals[:dims]
    coords = evecs[:, :dims] * np.sqrt(kept)[None, :]
    coords = coords - coords.mean(axis=0)
    for ax in range(dims):
        col = coords[:, ax]
        if col[int(np.argmax(np.abs(col)))] < 0:
            coords[:, ax] = -col
    total = float(evals.sum())
    share = 1.0 if total <= 0.0 else float(kept.sum() / total)
    return MdsEmbedding(cluster_id, coords, kept, share)


def procrustes_align(source: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Rotate/reflect centered ``source`` onto ``target`` (orthogonal Procrustes)."""
    u, _, vt = np.linalg.svd(source.T @ target)
    return source @ (u @ vt)


def cluster_embeddings(assignments, features, k: int, dims: int = 2, align: bool = False):
    """(matrices, embeddings, game-average matrix) for clusters 0..k-1."""
    matrices = [mean_distance_matrix(assignments, features, c) for c in range(k)]
    embeddings = [classical_mds(m, dims) for m in matrices]
    if align and embeddings:
        ref = embeddings[0].coords
        for e in embeddings[1:]:
            e.coords = procrustes_align(e.coords, ref)
    return matrices, embeddings, mean_distance_matrix(assignments, features, None)


def mds_to_json(matrices, embeddings, game_average, lineup=()) -> dict:
    return {
        "lineup": list(lineup),
        "game_average": game_average.matrix.tolist(),
        "clusters": [
            {
                "cluster_id": m.cluster_id,
                "n_frames": m.n_frames,
                "matrix": m.matrix.tolist(),
                "coords": e.coords.tolist(),
                "eigenvalues": e.eigenvalues.tolist(),
                "strain_share": e.strain_share,
            }
            for m, e in zip(matrices, embeddings)
        ],
    }


def mds_from_json(doc: dict):
    matrices, embeddings = [], []
    for c in doc["clusters"]:
        matrices.append(MeanDistanceMatrix(c["cluster_id"], np.array(c["matrix"]), c["n_frames"]))
        embeddings.append(
            MdsEmbedding(c["cluster_id"], np.array(c["coords"]), np.array(c["eigenvalues"]), c["strain_share"])
        )
    game = MeanDistanceMatrix(None, np.array(doc["game_average"]), 0)
    return matrices, embeddings, game
