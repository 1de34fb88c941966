"""Tracking/event file parsing, inactive-interval filtering and frame resampling."""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator, Sequence, TextIO

import numpy as np

from .errors import DataError, IntegrityError, SchemaError

log = logging.getLogger(__name__)

MAX_ABS_X_CM = 1600
MAX_ABS_Y_CM = 850
DEFAULT_GRID_MS = 50
DEFAULT_STALENESS_MS = 500


class EventKind(str, Enum):
    PRE_MATCH = "PRE_MATCH"
    QUARTER_BREAK = "QUARTER_BREAK"
    HALF_BREAK = "HALF_BREAK"
    POST_MATCH = "POST_MATCH"
    TIMEOUT = "TIMEOUT"
    FREE_THROW = "FREE_THROW"
    PERIOD_START = "PERIOD_START"


EXCLUDED_KINDS = frozenset(EventKind) - {EventKind.PERIOD_START}


@dataclass(frozen=True)
class RawSample:
    timestamp_ms: int
    player_id: str
    x_cm: int
    y_cm: int
    z_cm: int | None = None


@dataclass(frozen=True)
class GameEvent:
    kind: EventKind
    start_ms: int
    end_ms: int | None = None
    period_index: int | None = None


@dataclass(frozen=True)
class TrackingSchema:
    """Column names and row-validity limits for tracking CSVs."""

    timestamp: str = "timestamp_ms"
    player: str = "player_id"
    x: str = "x_cm"
    y: str = "y_cm"
    z: str | None = "z_cm"
    max_malformed_fraction: float = 0.01
    max_abs_x: int = MAX_ABS_X_CM
    max_abs_y: int = MAX_ABS_Y_CM


@dataclass
class ParseResult:
    """Parsed samples plus the malformed-row tally. Iterates like the samples."""

    samples: list[RawSample]
    malformed: int = 0
    total_rows: int = 0
    malformed_lines: list[int] = field(default_factory=list)

    def __iter__(self) -> Iterator[RawSample]:
        return iter(self.samples)

    def __len__(self) -> int:
        return len(self.samples)

    def __getitem__(self, i):
        return self.samples[i]


def parse_tracking(stream: TextIO, schema: TrackingSchema = TrackingSchema()) -> ParseResult:
    reader = csv.reader(stream)
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise SchemaError("tracking file is empty (no header)", module="ingest")
    required = [schema.timestamp, schema.player, schema.x, schema.y]
    missing = [c for c in required if c not in header]
    if missing:
        raise SchemaError(f"tracking file missing required column(s): {', '.join(missing)}", module="ingest")
    it, ip, ix, iy = (header.index(c) for c in required)
    iz = header.index(schema.z) if schema.z and schema.z in header else None

    result = ParseResult(samples=[])
    for lineno, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        result.total_rows += 1
        try:
            if len(row) != len(header):
                raise ValueError("column count")
            ts = int(row[it])
            pid = row[ip].strip()
            x = int(row[ix])
            y = int(row[iy])
            z = int(row[iz]) if iz is not None and row[iz].strip() != "" else None
            if ts < 0 or not pid or abs(x) > schema.max_abs_x or abs(y) > schema.max_abs_y:
                raise ValueError("out of range")
        except ValueError:
            result.malformed += 1
            result.malformed_lines.append(lineno)
            continue
        result.samples.append(RawSample(ts, pid, x, y, z))

    if result.malformed:
        log.warning("tracking: %d of %d rows malformed", result.malformed, result.total_rows)
        if result.malformed / result.total_rows > schema.max_malformed_fraction:
            raise IntegrityError(
                f"{result.malformed} of {result.total_rows} tracking rows malformed, "
                f"above tolerance {schema.max_malformed_fraction:g}",
                module="ingest",
            )
    return result


def parse_events(stream: TextIO) -> list[GameEvent]:
    reader = csv.DictReader(stream)
    fields = reader.fieldnames or []
    missing = [c for c in ("kind", "start_ms", "end_ms", "period_index") if c not in fields]
    if missing:
        raise SchemaError(f"events file missing column(s): {', '.join(missing)}", module="ingest")
    events = []
    for lineno, row in enumerate(reader, start=2):
        try:
            kind = EventKind(row["kind"].strip())
            start = int(row["start_ms"])
            end = int(row["end_ms"]) if row["end_ms"].strip() else None
            period = int(row["period_index"]) if row["period_index"].strip() else None
        except (ValueError, AttributeError) as exc:
            raise SchemaError(f"events line {lineno}: {exc}", module="ingest") from None
        events.append(GameEvent(kind, start, end, period))
    validate_events(events)
    return events


def validate_events(events: Sequence[GameEvent]) -> None:
    by_kind: dict[EventKind, list[GameEvent]] = {}
    for ev in events:
        if ev.kind is EventKind.PERIOD_START:
            if ev.period_index is None or ev.period_index < 1:
                raise DataError(f"PERIOD_START at {ev.start_ms} lacks a period index", module="ingest")
            if ev.end_ms is not None and ev.end_ms <= ev.start_ms:
                raise DataError(f"PERIOD_START at {ev.start_ms} ends before it starts", module="ingest")
        elif ev.end_ms is None or ev.start_ms >= ev.end_ms:
            raise DataError(f"{ev.kind.value} interval at {ev.start_ms} must have start_ms < end_ms", module="ingest")
        by_kind.setdefault(ev.kind, []).append(ev)
    for kind, evs in by_kind.items():
        if kind is EventKind.PERIOD_START:
            continue
        evs = sorted(evs, key=lambda e: e.start_ms)
        for a, b in zip(evs, evs[1:]):
            if b.start_ms < a.end_ms:
                raise DataError(f"overlapping {kind.value} intervals at {a.start_ms} and {b.start_ms}", module="ingest")


def exclusion_intervals(events: Iterable[GameEvent]) -> list[tuple[int, int]]:
    """Merged, sorted half-open intervals [start, end) to drop."""
    spans = sorted((e.start_ms, e.end_ms) for e in events if e.kind in EXCLUDED_KINDS)
    merged: list[list[int]] = []
    for s, e in spans:
        if merged and s <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], e)
        else:
            merged.append([s, e])
    return [(s, e) for s, e in merged]


def _excluded_mask(times: np.ndarray, intervals: Sequence[tuple[int, int]]) -> np.ndarray:
    if not intervals or times.size == 0:
        return np.zeros(times.shape, dtype=bool)
    starts = np.array([s for s, _ in intervals], dtype=np.int64)
    ends = np.array([e for _, e in intervals], dtype=np.int64)
    idx = np.searchsorted(starts, times, side="right") - 1
    hit = idx >= 0
    hit[hit] = times[hit] < ends[idx[hit]]
    return hit


class PeriodTimeline:
    """Maps capture timestamps to the period whose PERIOD_START most recently began."""

    def __init__(self, events: Iterable[GameEvent]):
        starts = sorted((e.start_ms, e.period_index) for e in events if e.kind is EventKind.PERIOD_START)
        self.starts = np.array([s for s, _ in starts], dtype=np.int64)
        self.indices = np.array([p for _, p in starts], dtype=np.int64)

    def __bool__(self) -> bool:
        return self.starts.size > 0

    def period_at(self, times) -> np.ndarray:
        """Period index per timestamp; 0 before the first period start."""
        times = np.asarray(times, dtype=np.int64)
        idx = np.searchsorted(self.starts, times, side="right") - 1
        return np.where(idx >= 0, self.indices[np.maximum(idx, 0)], 0) if self.starts.size else np.zeros_like(times)


def filter_active(samples: Sequence[RawSample], events: Sequence[GameEvent]) -> list[RawSample]:
    kinds = {e.kind for e in events}
    if EventKind.PERIOD_START not in kinds:
        raise DataError("no PERIOD_START events: attack direction cannot be resolved", module="ingest")
    for required in (EventKind.PRE_MATCH, EventKind.POST_MATCH):
        if required not in kinds:
            raise DataError(f"events lack a {required.value} boundary", module="ingest")
    times = np.fromiter((s.timestamp_ms for s in samples), dtype=np.int64, count=len(samples))
    drop = _excluded_mask(times, exclusion_intervals(events))
    return [s for s, d in zip(samples, drop) if not d]


@dataclass
class FrameSeries:
    """Regular-grid frames. ``positions[i, p]`` is NaN where player p is absent."""

    grid_ms: int
    times: np.ndarray
    player_ids: tuple[str, ...]
    positions: np.ndarray
    contiguous: np.ndarray
    periods: np.ndarray

    def __len__(self) -> int:
        return int(self.times.size)

    @property
    def present(self) -> np.ndarray:
        return ~np.isnan(self.positions[:, :, 0])

    def frame(self, i: int) -> dict[str, tuple[float, float]]:
        row = self.positions[i]
        return {p: (row[j, 0], row[j, 1]) for j, p in enumerate(self.player_ids) if not np.isnan(row[j, 0])}

    @classmethod
    def empty(cls, grid_ms: int) -> "FrameSeries":
        return cls(grid_ms, np.zeros(0, np.int64), (), np.zeros((0, 0, 2)), np.zeros(0, bool), np.zeros(0, np.int64))

    def to_csv(self, stream: TextIO) -> None:
        stream.write(f"#grid_ms={self.grid_ms}\n")
        stream.write("frame_ms,period,contiguous,player_id,x_cm,y_cm\n")
        present = self.present
        for i in range(len(self)):
            head = f"{self.times[i]},{self.periods[i]},{int(self.contiguous[i])},"
            for j in np.flatnonzero(present[i]):
                x, y = self.positions[i, j]
                stream.write(f"{head}{self.player_ids[j]},{_fmt(x)},{_fmt(y)}\n")

    @classmethod
    def from_csv(cls, stream: TextIO) -> "FrameSeries":
        first = stream.readline()
        if not first.startswith("#grid_ms="):
            raise SchemaError("frames file must start with a '#grid_ms=N' line", module="ingest")
        grid_ms = int(first.strip().split("=", 1)[1])
        reader = csv.DictReader(stream)
        rows = list(reader)
        if not rows:
            return cls.empty(grid_ms)
        players = tuple(sorted({r["player_id"] for r in rows}))
        col = {p: j for j, p in enumerate(players)}
        times = sorted({int(r["frame_ms"]) for r in rows})
        row_of = {t: i for i, t in enumerate(times)}
        n = len(times)
        pos = np.full((n, len(players), 2), np.nan)
        contiguous = np.zeros(n, dtype=bool)
        periods = np.zeros(n, dtype=np.int64)
        for r in rows:
            i = row_of[int(r["frame_ms"])]
            pos[i, col[r["player_id"]]] = (float(r["x_cm"]), float(r["y_cm"]))
            contiguous[i] = r["contiguous"] == "1"
            periods[i] = int(r["period"])
        return cls(grid_ms, np.array(times, dtype=np.int64), players, pos, contiguous, periods)


def _fmt(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def resample_frames(
    samples: Sequence[RawSample],
    grid_ms: int = DEFAULT_GRID_MS,
    staleness_ms: int = DEFAULT_STALENESS_MS,
    events: Sequence[GameEvent] | None = None,
) -> FrameSeries:
    """Carry each player's last observation forward onto a regular tick grid.

    Ticks run over multiples of ``grid_ms`` between the first and last sample.
    A player appears in a frame only if its last sample at or before the tick
    is at most ``staleness_ms`` old; among equal timestamps the later row in
    file order wins. With ``events``, ticks inside excluded intervals are
    dropped, contiguity breaks across them, and frames get period indices.
    """
    if grid_ms < 1:
        raise ValueError("grid_ms must be >= 1")
    if staleness_ms < grid_ms:
        raise ValueError("staleness_ms must be >= grid_ms")
    if not samples:
        return FrameSeries.empty(grid_ms)

    times = np.fromiter((s.timestamp_ms for s in samples), dtype=np.int64, count=len(samples))
    t0 = -(-int(times.min()) // grid_ms) * grid_ms
    t1 = int(times.max()) // grid_ms * grid_ms
    ticks = np.arange(t0, t1 + 1, grid_ms, dtype=np.int64)
    intervals = exclusion_intervals(events) if events else []
    ticks = ticks[~_excluded_mask(ticks, intervals)]

    players = tuple(sorted({s.player_id for s in samples}))
    pos = np.full((ticks.size, len(players), 2), np.nan)
    by_player: dict[str, list[int]] = {p: [] for p in players}
    for i, s in enumerate(samples):
        by_player[s.player_id].append(i)
    xs = np.fromiter((s.x_cm for s in samples), dtype=np.float64, count=len(samples))
    ys = np.fromiter((s.y_cm for s in samples), dtype=np.float64, count=len(samples))
    for j, p in enumerate(players):
        rows = np.array(by_player[p], dtype=np.int64)
        order = rows[np.argsort(times[rows], kind="stable")]
        ts = times[order]
        idx = np.searchsorted(ts, ticks, side="right") - 1
        ok = idx >= 0
        ok[ok] = ticks[ok] - ts[idx[ok]] <= staleness_ms
        src = order[idx[ok]]
        pos[ok, j, 0] = xs[src]
        pos[ok, j, 1] = ys[src]

    keep = ~np.all(np.isnan(pos[:, :, 0]), axis=1)
    ticks, pos = ticks[keep], pos[keep]
    contiguous = np.zeros(ticks.size, dtype=bool)
    if ticks.size > 1:
        contiguous[1:] = np.diff(ticks) == grid_ms
        if intervals:
            starts = np.array([s for s, _ in intervals], dtype=np.int64)
            ends = np.array([e for _, e in intervals], dtype=np.int64)
            # an excised interval overlapping (t[i-1], t[i]) separates the pair
            opened = np.searchsorted(starts, ticks[1:], side="left")
            closed = np.searchsorted(ends, ticks[:-1], side="right")
            contiguous[1:] &= opened <= closed
    periods = PeriodTimeline(events).period_at(ticks) if events else np.zeros(ticks.size, dtype=np.int64)
    return FrameSeries(grid_ms, ticks, players, pos, contiguous, periods.astype(np.int64))
