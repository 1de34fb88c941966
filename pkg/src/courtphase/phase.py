"""Offense/defense/transition labels, cluster phase table, switch matrix and rate."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ConfigError, DataError

DEFAULT_BAND_CM = 400.0


class PhaseLabel(str, Enum):
    OFFENSE = "O"
    DEFENSE = "D"
    TRANSITION = "TR"


# row order of the phase table, also the majority tie-break priority
TABLE_ORDER = (PhaseLabel.TRANSITION, PhaseLabel.DEFENSE, PhaseLabel.OFFENSE)
_CODE = {PhaseLabel.TRANSITION: 0, PhaseLabel.DEFENSE: 1, PhaseLabel.OFFENSE: 2}


@dataclass(frozen=True)
class AttackDirection:
    """Sign of the x half attacked in periods 1-2; flipped from period 3 on."""

    first_half_sign: int = 1

    def __post_init__(self):
        if self.first_half_sign not in (1, -1):
            raise ConfigError("attack direction sign must be +1 or -1", module="phase")

    @classmethod
    def parse(cls, text: str) -> "AttackDirection":
        t = text.strip().lower()
        if t in ("+x", "+", "+1", "1", "x"):
            return cls(1)
        if t in ("-x", "-", "-1"):
            return cls(-1)
        raise ConfigError(f"attack direction must be '+x' or '-x', got {text!r}", module="phase")

    def flipped(self) -> "AttackDirection":
        return AttackDirection(-self.first_half_sign)

    def sign_for(self, period) -> np.ndarray:
        period = np.asarray(period)
        if np.any(period < 1):
            raise DataError("frame outside any period: attack direction unknown", module="phase")
        return np.where(period >= 3, -self.first_half_sign, self.first_half_sign)


def label_frame(mean_x_cm: float, band_cm: float = DEFAULT_BAND_CM, attack_sign: int = 1) -> PhaseLabel:
    if abs(mean_x_cm) <= band_cm:
        return PhaseLabel.TRANSITION
    return PhaseLabel.OFFENSE if np.sign(mean_x_cm) == attack_sign else PhaseLabel.DEFENSE


def label_frames(mean_x_cm, periods, band_cm: float = DEFAULT_BAND_CM, attack: AttackDirection = AttackDirection()):
    """Vectorised :func:`label_frame`; returns an array of PhaseLabel codes (TR=0, D=1, O=2)."""
    mx = np.asarray(mean_x_cm, dtype=np.float64)
    sign = attack.sign_for(periods)
    codes = np.where(np.sign(mx) == sign, _CODE[PhaseLabel.OFFENSE], _CODE[PhaseLabel.DEFENSE])
    codes[np.abs(mx) <= band_cm] = _CODE[PhaseLabel.TRANSITION]
    return codes.astype(np.int64)


def codes_to_labels(codes) -> list[PhaseLabel]:
    return [TABLE_ORDER[int(c)] for c in codes]


def labels_to_codes(labels) -> np.ndarray:
    return np.array([_CODE[PhaseLabel(l)] for l in labels], dtype=np.int64)


@dataclass
class ClusterPhaseTable:
    """``percent[c]`` holds the (TR, D, O) shares of cluster c's frames."""

    counts: np.ndarray
    percent: np.ndarray
    majority: list[PhaseLabel]

    @property
    def k(self) -> int:
        return self.counts.shape[0]

    def to_dict(self) -> dict:
        return {
            "rows": [p.value for p in TABLE_ORDER],
            "counts": self.counts.tolist(),
            "percent": self.percent.tolist(),
            "majority": [m.value for m in self.majority],
        }


def cluster_phase_table(assignments, frame_labels, k: int | None = None) -> ClusterPhaseTable:
    labels = np.asarray(assignments, dtype=np.int64)
    codes = np.asarray(frame_labels)
    if codes.dtype.kind not in "iu":
        codes = labels_to_codes(codes)
    if labels.shape != codes.shape:
        raise DataError("assignments and labels cover different frames", module="phase")
    k = int(labels.max()) + 1 if k is None else k
    counts = np.zeros((k, 3), dtype=np.int64)
    np.add.at(counts, (labels, codes), 1)
    totals = counts.sum(axis=1, keepdims=True)
    percent = np.divide(100.0 * counts, totals, out=np.zeros((k, 3)), where=totals > 0)
    # argmax picks the first maximum, i.e. TR over D over O on exact ties
    majority = [TABLE_ORDER[int(np.argmax(row))] for row in counts]
    return ClusterPhaseTable(counts, percent, majority)


@dataclass
class TransitionMatrix:
    """``counts[i, j]``: switches from cluster j to cluster i (columns are sources)."""

    counts: np.ndarray
    percent: np.ndarray
    switch_count: int

    def to_dict(self) -> dict:
        return {
            "orientation": "percent[to][from]; columns sum to 100",
            "counts": self.counts.tolist(),
            "percent": self.percent.tolist(),
            "switch_count": self.switch_count,
        }


def transition_matrix(assignments, contiguous=None, k: int | None = None) -> TransitionMatrix:
    """Column-normalised switch frequencies between consecutive contiguous frames.

    ``contiguous[i]`` says whether frame i directly follows frame i-1; pairs
    across a gap are not counted. Omitted means fully contiguous.
    """
    labels = np.asarray(assignments, dtype=np.int64)
    k = int(labels.max()) + 1 if k is None and labels.size else (k or 0)
    counts = np.zeros((k, k), dtype=np.int64)
    if labels.size >= 2:
        src, dst = labels[:-1], labels[1:]
        keep = src != dst
        if contiguous is not None:
            keep &= np.asarray(contiguous, dtype=bool)[1:]
        np.add.at(counts, (dst[keep], src[keep]), 1)
    col = counts.sum(axis=0, keepdims=True)
    percent = np.divide(100.0 * counts, col, out=np.zeros((k, k)), where=col > 0)
    return TransitionMatrix(counts, percent, int(counts.sum()))


@dataclass
class SwitchStats:
    switch_count: int
    duration_s: float
    rate_per_s: float
    seconds_per_switch: float | None

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def switch_rate(switch_count: int, duration_ms: float) -> SwitchStats:
    if duration_ms <= 0:
        raise ConfigError("stint duration must be positive", module="phase")
    duration_s = duration_ms / 1000.0
    rate = switch_count / duration_s
    return SwitchStats(int(switch_count), duration_s, rate, duration_s / switch_count if switch_count else None)
