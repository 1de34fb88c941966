"""Lineup stint extraction and per-frame dyad-distance features."""
from __future__ import annotations

import csv
import itertools
import logging
from dataclasses import dataclass
from typing import Iterable, TextIO

import numpy as np

from . import _backend
from .errors import ConsistencyError, DataError
from .ingest import FrameSeries

log = logging.getLogger(__name__)

LINEUP_SIZE = 5
DEFAULT_MIN_DURATION_MS = 300_000


def canonical_dyads(lineup: Iterable[str]) -> list[tuple[str, str]]:
    """Dyads (i, j), i < j, over the lexicographically sorted lineup."""
    return list(itertools.combinations(sorted(lineup), 2))


def dyad_column_names(size: int = LINEUP_SIZE) -> list[str]:
    return [f"d{i}{j}" for i, j in itertools.combinations(range(size), 2)]


@dataclass
class Stint:
    lineup: tuple[str, ...]
    intervals: list[tuple[int, int]]
    total_duration_ms: int
    frame_ms: np.ndarray

    @property
    def n_frames(self) -> int:
        return int(self.frame_ms.size)

    def to_dict(self) -> dict:
        return {
            "lineup": list(self.lineup),
            "intervals": [list(iv) for iv in self.intervals],
            "total_duration_ms": self.total_duration_ms,
            "n_frames": self.n_frames,
        }

    @classmethod
    def from_dict(cls, d: dict, grid_ms: int) -> "Stint":
        intervals = [tuple(iv) for iv in d["intervals"]]
        frame_ms = np.concatenate(
            [np.arange(s, e, grid_ms, dtype=np.int64) for s, e in intervals]
        ) if intervals else np.zeros(0, np.int64)
        return cls(tuple(d["lineup"]), intervals, int(d["total_duration_ms"]), frame_ms)


@dataclass
class StintExtraction:
    """Per-frame lineup classification behind :func:`extract_stints`."""

    stints: list[Stint]
    lineup_of_frame: list[tuple[str, ...] | None]
    overfull_frames: int
    underfull_frames: int
    short_stint_frames: int


def classify_frames(frames: FrameSeries, team_roster: Iterable[str]):
    """Lineup key per frame (None unless exactly 5 roster players are present)."""
    roster = set(team_roster)
    cols = [j for j, p in enumerate(frames.player_ids) if p in roster]
    ids = np.array(frames.player_ids, dtype=object)[cols] if cols else np.zeros(0, dtype=object)
    present = frames.present[:, cols] if cols else np.zeros((len(frames), 0), bool)
    counts = present.sum(axis=1)
    keys: list[tuple[str, ...] | None] = [None] * len(frames)
    for i in np.flatnonzero(counts == LINEUP_SIZE):
        keys[i] = tuple(sorted(ids[present[i]]))
    return keys, int(np.sum(counts > LINEUP_SIZE)), int(np.sum(counts < LINEUP_SIZE))


def _intervals(frame_ms: np.ndarray, grid_ms: int) -> list[tuple[int, int]]:
    if frame_ms.size == 0:
        return []
    breaks = np.flatnonzero(np.diff(frame_ms) != grid_ms) + 1
    starts = np.concatenate([[0], breaks])
    ends = np.concatenate([breaks, [frame_ms.size]])
    return [(int(frame_ms[s]), int(frame_ms[e - 1]) + grid_ms) for s, e in zip(starts, ends)]


def extract_stints_detailed(
    frames: FrameSeries, team_roster: Iterable[str], min_duration_ms: int = DEFAULT_MIN_DURATION_MS
) -> StintExtraction:
    if min_duration_ms <= 0:
        raise ValueError("min_duration_ms must be positive")
    keys, overfull, underfull = classify_frames(frames, team_roster)
    if overfull:
        log.warning("%d frames show more than %d roster players; excluded", overfull, LINEUP_SIZE)
    groups: dict[tuple[str, ...], list[int]] = {}
    for i, key in enumerate(keys):
        if key is not None:
            groups.setdefault(key, []).append(i)
    stints, short = [], 0
    for lineup, rows in groups.items():
        fm = frames.times[np.array(rows, dtype=np.int64)]
        duration = int(fm.size) * frames.grid_ms
        if duration < min_duration_ms:
            short += fm.size
            continue
        stints.append(Stint(lineup, _intervals(fm, frames.grid_ms), duration, fm))
    stints.sort(key=lambda s: (int(s.frame_ms[0]), s.lineup))
    return StintExtraction(stints, keys, overfull, underfull, short)


def extract_stints(
    frames: FrameSeries, team_roster: Iterable[str], min_duration_ms: int = DEFAULT_MIN_DURATION_MS
) -> list[Stint]:
    """Five-player lineups whose accumulated floor time reaches ``min_duration_ms``.

    Re-entries accumulate, so a stint may span several intervals. Frames with
    fewer or more than five roster players belong to no stint.
    """
    return extract_stints_detailed(frames, team_roster, min_duration_ms).stints


def stint_positions(stint: Stint, frames: FrameSeries) -> np.ndarray:
    """(n_frames, 5, 2) positions in canonical lineup order."""
    rows = np.searchsorted(frames.times, stint.frame_ms)
    if np.any(rows >= len(frames)) or np.any(frames.times[np.minimum(rows, len(frames) - 1)] != stint.frame_ms):
        raise ConsistencyError("stint references frames absent from the series", module="segment")
    try:
        cols = [frames.player_ids.index(p) for p in stint.lineup]
    except ValueError as exc:
        raise ConsistencyError(f"lineup player not in frames: {exc}", module="segment") from None
    pos = frames.positions[np.ix_(rows, cols)]
    if np.isnan(pos).any():
        bad = int(np.isnan(pos[:, :, 0]).any(axis=1).sum())
        raise ConsistencyError(f"{bad} stint frames lack a lineup player", module="segment")
    return pos


@dataclass
class DyadVector:
    frame_ms: int
    distances: np.ndarray


@dataclass
class DyadFeatures:
    """Row i holds the 10 canonical dyad distances (cm) at ``frame_ms[i]``."""

    lineup: tuple[str, ...]
    frame_ms: np.ndarray
    distances: np.ndarray

    def __len__(self) -> int:
        return int(self.frame_ms.size)

    def __getitem__(self, i: int) -> DyadVector:
        return DyadVector(int(self.frame_ms[i]), self.distances[i])

    def to_csv(self, stream: TextIO) -> None:
        w = csv.writer(stream, lineterminator="\n")
        if self.lineup:
            stream.write("#lineup=" + ",".join(self.lineup) + "\n")
        w.writerow(["frame_ms", *dyad_column_names(len(self.lineup) or LINEUP_SIZE)])
        for t, row in zip(self.frame_ms, self.distances):
            w.writerow([int(t), *(repr(float(v)) for v in row)])

    @classmethod
    def from_csv(cls, stream: TextIO, lineup: tuple[str, ...] = ()) -> "DyadFeatures":
        reader = csv.reader(stream)
        header = next(reader, None)
        if header and header[0].startswith("#lineup="):
            lineup = tuple([header[0][len("#lineup="):], *header[1:]])
            header = next(reader, None)
        expected = ["frame_ms", *dyad_column_names()]
        if header != expected:
            raise DataError(f"features header must be {','.join(expected)}", module="segment")
        rows = [[float(v) for v in r] for r in reader if r]
        arr = np.array(rows, dtype=np.float64).reshape(-1, len(expected))
        return cls(lineup, arr[:, 0].astype(np.int64), np.ascontiguousarray(arr[:, 1:]))


def dyad_features(stint: Stint, frames: FrameSeries) -> DyadFeatures:
    pos = stint_positions(stint, frames)
    return DyadFeatures(stint.lineup, stint.frame_ms.copy(), _backend.dyad_distances(pos))


def mean_x(frame) -> float:
    """Mean x (cm) of a frame given as a player->(x, y) mapping or an (n, 2) array."""
    if isinstance(frame, dict):
        xs = [xy[0] for xy in frame.values()]
    else:
        xs = np.asarray(frame, dtype=np.float64)[:, 0]
    return float(np.mean(xs))


def stint_mean_x(stint: Stint, frames: FrameSeries) -> np.ndarray:
    return stint_positions(stint, frames)[:, :, 0].mean(axis=1)
