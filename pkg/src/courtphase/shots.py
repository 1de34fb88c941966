"""Field-goal attempts joined to the cluster active at shot time."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Sequence, TextIO

import numpy as np

from .errors import ConfigError, SchemaError

DEFAULT_TOLERANCE_MS = 1000


@dataclass(frozen=True)
class ShotEvent:
    timestamp_ms: int
    made: bool
    shooter: str | None = None


def parse_shots(stream: TextIO) -> list[ShotEvent]:
    reader = csv.DictReader(stream)
    fields = reader.fieldnames or []
    for col in ("timestamp_ms", "made"):
        if col not in fields:
            raise SchemaError(f"shots file missing column {col!r}", module="shots")
    shots = []
    for lineno, row in enumerate(reader, start=2):
        if "kind" in row and row["kind"] not in (None, "", "FG"):
            raise SchemaError(f"shots line {lineno}: only field goals (kind FG) are accepted", module="shots")
        made = row["made"].strip()
        if made not in ("0", "1"):
            raise SchemaError(f"shots line {lineno}: made must be 0 or 1", module="shots")
        try:
            ts = int(row["timestamp_ms"])
        except ValueError:
            raise SchemaError(f"shots line {lineno}: bad timestamp", module="shots") from None
        shooter = (row.get("shooter_id") or "").strip() or None
        shots.append(ShotEvent(ts, made == "1", shooter))
    return shots


def write_shots(shots: Sequence[ShotEvent], stream: TextIO) -> None:
    stream.write("timestamp_ms,made,shooter_id\n")
    for s in shots:
        stream.write(f"{s.timestamp_ms},{int(s.made)},{s.shooter or ''}\n")


def attach_shots(shots: Sequence[ShotEvent], frame_ms, assignments, tolerance_ms: int = DEFAULT_TOLERANCE_MS):
    """Cluster id of the nearest frame within ``tolerance_ms`` per shot, else None.

    Equidistant frames resolve to the earlier one.
    """
    if tolerance_ms < 0:
        raise ConfigError("tolerance_ms must be >= 0", module="shots")
    times = np.asarray(frame_ms, dtype=np.int64)
    labels = np.asarray(assignments, dtype=np.int64)
    out: list[int | None] = []
    for shot in shots:
        if times.size == 0:
            out.append(None)
            continue
        j = int(np.searchsorted(times, shot.timestamp_ms))
        cands = [i for i in (j - 1, j) if 0 <= i < times.size]
        best = min(cands, key=lambda i: (abs(int(times[i]) - shot.timestamp_ms), i))
        out.append(int(labels[best]) if abs(int(times[best]) - shot.timestamp_ms) <= tolerance_ms else None)
    return out


@dataclass
class ShotReport:
    per_cluster: dict[int, tuple[int, int]] = field(default_factory=dict)
    attempts: int = 0
    made: int = 0
    unmatched: int = 0

    @staticmethod
    def pct(made: int, attempts: int) -> float | None:
        return 100.0 * made / attempts if attempts else None

    @property
    def percentage(self) -> float | None:
        return self.pct(self.made, self.attempts)

    @property
    def total_shots(self) -> int:
        return self.attempts + self.unmatched

    def cluster_percentage(self, c: int) -> float | None:
        a, m = self.per_cluster.get(c, (0, 0))
        return self.pct(m, a)

    def to_dict(self) -> dict:
        return {
            "clusters": [
                {"cluster": c, "attempts": a, "made": m, "percentage": self.pct(m, a)}
                for c, (a, m) in sorted(self.per_cluster.items())
            ],
            "attempts": self.attempts,
            "made": self.made,
            "percentage": self.percentage,
            "unmatched": self.unmatched,
        }


def shot_report(shot_clusters: Sequence[int | None], made_flags: Sequence[bool]) -> ShotReport:
    """Integer attempt/make tallies per cluster; overall figures cover matched shots."""
    if len(shot_clusters) != len(made_flags):
        raise ConfigError("shot clusters and made flags differ in length", module="shots")
    report = ShotReport()
    for c, made in zip(shot_clusters, made_flags):
        if c is None:
            report.unmatched += 1
            continue
        a, m = report.per_cluster.get(c, (0, 0))
        report.per_cluster[c] = (a + 1, m + int(bool(made)))
        report.attempts += 1
        report.made += int(bool(made))
    return report
