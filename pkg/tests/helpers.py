"""Shared fixtures data and helpers for the test suite."""
from __future__ import annotations

import functools
import io
import itertools
import warnings
from dataclasses import dataclass

import numpy as np

from courtphase import cluster, ingest, mds, phase, segment, synth

# Per-cluster (TR, D, O) frame counts of a reference lineup. Each count
# vector is the smallest whose percentages round to the published shares.
PHASE_SHARE_COUNTS = np.array(
    [
        [27, 73, 221],
        [290, 137, 906],
        [560, 45, 77],
        [70, 697, 222],
        [334, 147, 132],
        [78, 133, 530],
    ]
)
PUBLISHED_PHASE_SHARES = np.array(
    [
        [8.41, 22.74, 68.85],
        [21.76, 10.28, 67.97],
        [82.11, 6.60, 11.29],
        [7.08, 70.48, 22.45],
        [54.49, 23.98, 21.53],
        [10.53, 17.95, 71.52],
    ]
)

# Switch counts of the same lineup, SWITCH_COUNTS[to, from], reconstructed
# from the published column percentages.
SWITCH_COUNTS = np.array(
    [
        [0, 8, 1, 6, 3, 12],
        [9, 0, 1, 17, 3, 41],
        [0, 1, 0, 0, 0, 9],
        [10, 15, 0, 0, 5, 41],
        [1, 3, 0, 3, 0, 13],
        [9, 44, 8, 45, 9, 0],
    ]
)
PUBLISHED_SWITCH_PERCENT = np.array(
    [
        [0.00, 11.27, 10, 8.45, 15, 10.34],
        [31.03, 0.00, 10, 23.94, 15, 35.34],
        [0.00, 1.41, 0, 0.00, 0, 7.76],
        [34.48, 21.13, 0, 0.00, 25, 35.34],
        [3.45, 4.23, 0, 4.23, 0, 11.21],
        [31.03, 61.97, 80, 63.38, 45, 0.00],
    ]
)

# (cluster, made) per shot of the same lineup.
SHOT_FIXTURE = [(5, True)] * 5 + [(5, False)] * 3 + [(0, True)] * 2 + [(0, False)] * 2 + [(1, False)] * 2 + [(4, False)]


def eulerian_sequence(counts: np.ndarray) -> list[int]:
    """Cluster sequence whose consecutive switches reproduce ``counts[to, from]`` exactly.

    Hierholzer's algorithm on the multigraph with counts[j, i] edges i -> j.
    """
    k = counts.shape[0]
    out_deg = counts.sum(axis=0)
    in_deg = counts.sum(axis=1)
    starts = [i for i in range(k) if out_deg[i] - in_deg[i] == 1]
    start = starts[0] if starts else int(np.flatnonzero(out_deg)[0])
    remaining = counts.copy()
    stack, path = [start], []
    while stack:
        v = stack[-1]
        nxt = np.flatnonzero(remaining[:, v])
        if nxt.size:
            w = int(nxt[0])
            remaining[w, v] -= 1
            stack.append(w)
        else:
            path.append(stack.pop())
    return path[::-1]


def brute_force_wcss_k2(points: np.ndarray) -> float:
    """Minimum within-cluster sum of squares over every 2-partition."""
    n = points.shape[0]
    best = np.inf
    for mask in itertools.product((0, 1), repeat=n - 1):
        labels = np.array((0,) + mask)
        if labels.sum() == 0:
            continue
        w = 0.0
        for c in (0, 1):
            grp = points[labels == c]
            w += float(((grp - grp.mean(axis=0)) ** 2).sum())
        best = min(best, w)
    return best


@dataclass
class SyntheticRun:
    game: synth.SyntheticGame
    frames: ingest.FrameSeries
    features: segment.DyadFeatures
    curve: cluster.KSelectionCurve
    chosen_k: int
    model: cluster.ClusterModel
    codes: np.ndarray
    table: phase.ClusterPhaseTable
    spreads: list[float]

    def transition_widest_defense_tightest(self) -> bool:
        widest = self.table.majority[int(np.argmax(self.spreads))]
        tightest = self.table.majority[int(np.argmin(self.spreads))]
        return widest is phase.PhaseLabel.TRANSITION and tightest is phase.PhaseLabel.DEFENSE


@functools.lru_cache(maxsize=None)
def synthetic_run(seed: int, noise_sd: float = 40.0, k_max: int = 8, restarts: int = 20) -> SyntheticRun:
    game = synth.generate_game(synth.default_config(noise_sd=noise_sd), seed)
    samples = ingest.parse_tracking(io.StringIO(game.tracking_csv))
    events = ingest.parse_events(io.StringIO(game.events_csv))
    frames = ingest.resample_frames(ingest.filter_active(samples, events), 50, 500, events)
    stint = segment.extract_stints(frames, game.roster)[0]
    feats = segment.dyad_features(stint, frames)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", cluster.SelectionWarning)
        curve = cluster.bd_td_curve(feats, 2, k_max, seed=seed, restarts=restarts)
        k = cluster.select_k(curve, 0.10)
    model = curve.models[k]
    rows = np.searchsorted(frames.times, feats.frame_ms)
    codes = phase.label_frames(segment.stint_mean_x(stint, frames), frames.periods[rows], 400.0, phase.AttackDirection(1))
    table = phase.cluster_phase_table(model.assignments, codes, k)
    spreads = [mds.mean_distance_matrix(model.assignments, feats, c).off_diagonal_mean() for c in range(k)]
    return SyntheticRun(game, frames, feats, curve, k, model, codes, table, spreads)
