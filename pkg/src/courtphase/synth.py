"""Seeded synthetic games with known formations, plus recovery scoring.

Randomness comes from numpy's Philox counter-based generator keyed by a
``SeedSequence(seed)`` spawned into independent streams (schedule, noise,
shots). Philox is fully specified integer arithmetic, so draws are
identical across platforms; emitted coordinates are rounded to whole cm.

Config schema (JSON)::

    {
      "lineup": ["p1", ... 5 ids],        # on-court players
      "bench": ["p6", ...],               # optional roster-only players
      "sample_ms": 40,                    # per-player sensor period
      "attack_dir": "+x",                 # half attacked in periods 1-2
      "blend_ms": 300,                    # linear morph at each template change
      "dwell": {"mean_ms": 2000, "sd_ms": 800},   # log-normal dwell times
      "schedule": {
        "pre_match_ms": 20000, "period_ms": 150000, "periods": 4,
        "quarter_break_ms": 20000, "half_break_ms": 40000, "post_match_ms": 20000,
        "timeouts": [{"period": 2, "at_ms": 60000, "duration_ms": 30000}],
        "free_throws": [{"period": 3, "at_ms": 90000, "duration_ms": 15000}]
      },
      "templates": [
        {"name": "O1", "phase": "O", "anchors": [[x, y] * 5], "noise_sd": 30,
         "shot_prob": 0.002, "make_prob": 0.5}, ...
      ]
    }

Template anchors are written for a team attacking +x; they are mirrored in
x whenever the team attacks -x. ``at_ms`` counts active playing time into
the period. ``shot_prob`` is per sensor tick.
"""
from __future__ import annotations

import copy
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError
from .ingest import MAX_ABS_X_CM, MAX_ABS_Y_CM, EventKind
from .phase import AttackDirection, PhaseLabel, TABLE_ORDER
from .shots import ShotEvent, write_shots

COURT_HALF_LENGTH_CM = 1400
COURT_HALF_WIDTH_CM = 750
# resting spot for players during excluded intervals (bench side)
_BENCH_Y_CM = -800

DEFAULT_CONFIG: dict = {
    "lineup": ["p1", "p2", "p3", "p4", "p5"],
    "bench": ["p6", "p7"],
    "sample_ms": 40,
    "attack_dir": "+x",
    "blend_ms": 300,
    "dwell": {"mean_ms": 2000, "sd_ms": 800},
    "schedule": {
        "pre_match_ms": 20000,
        "period_ms": 150000,
        "periods": 4,
        "quarter_break_ms": 20000,
        "half_break_ms": 40000,
        "post_match_ms": 20000,
        "timeouts": [{"period": 2, "at_ms": 60000, "duration_ms": 30000}],
        "free_throws": [{"period": 3, "at_ms": 90000, "duration_ms": 15000}],
    },
    "templates": [],  # filled below
}

# Anchors chosen so the six dyad-distance profiles are near-equidistant
# (otherwise two close templates merge and the k=6 increment collapses),
# while defense stays compact and transition wide.
_DEFAULT_TEMPLATES = [
    ("O1", "O", [[783, 405], [1240, -307], [417, 386], [184, 471], [1300, -170]], 0.004, 0.35),
    ("O2", "O", [[207, -621], [864, 66], [650, 174], [1021, 364], [1105, 576]], 0.004, 0.4),
    ("O3", "O", [[613, -218], [1299, -470], [-134, 97], [1104, 181], [1016, 60]], 0.006, 0.6),
    ("D1", "D", [[-1058, -315], [-996, -451], [-971, -192], [-909, -329], [-120, -414]], 0.0, 0.0),
    ("D2", "D", [[-921, 475], [-772, 495], [-681, 376], [-1244, -321], [-829, 356]], 0.0, 0.0),
    ("TR", "TR", [[-106, 230], [-1114, -101], [-360, -637], [647, -152], [979, 284]], 0.0005, 0.3),
]
DEFAULT_CONFIG["templates"] = [
    {"name": n, "phase": p, "anchors": a, "noise_sd": 30.0, "shot_prob": sp, "make_prob": mp}
    for n, p, a, sp, mp in _DEFAULT_TEMPLATES
]


def default_config(noise_sd: float | None = None, period_ms: int | None = None) -> dict:
    """Copy of the built-in config; ``period_ms`` rescales stoppage times to match."""
    cfg = copy.deepcopy(DEFAULT_CONFIG)
    if noise_sd is not None:
        for t in cfg["templates"]:
            t["noise_sd"] = float(noise_sd)
    if period_ms is not None:
        sched = cfg["schedule"]
        scale = int(period_ms) / sched["period_ms"]
        sched["period_ms"] = int(period_ms)
        for key in ("timeouts", "free_throws"):
            for st in sched[key]:
                st["at_ms"] = max(1, int(round(st["at_ms"] * scale)))
    return cfg


@dataclass
class FormationTemplate:
    name: str
    phase: PhaseLabel
    anchors: np.ndarray
    noise_sd: float
    shot_prob: float = 0.0
    make_prob: float = 0.0

    def mean_dyad(self) -> float:
        d = self.anchors[:, None, :] - self.anchors[None, :, :]
        iu = np.triu_indices(len(self.anchors), k=1)
        return float(np.sqrt((d**2).sum(-1))[iu].mean())


def load_config(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read synth config {path}: {exc}", module="synth") from None


def parse_templates(cfg: dict) -> list[FormationTemplate]:
    out = []
    for t in cfg.get("templates", []):
        anchors = np.asarray(t["anchors"], dtype=np.float64)
        if anchors.shape != (5, 2):
            raise ConfigError(f"template {t.get('name')}: anchors must be 5 [x, y] pairs", module="synth")
        if (np.abs(anchors[:, 0]) > COURT_HALF_LENGTH_CM).any() or (np.abs(anchors[:, 1]) > COURT_HALF_WIDTH_CM).any():
            raise ConfigError(f"template {t.get('name')}: anchor off court", module="synth")
        noise = float(t.get("noise_sd", 0.0))
        shot_p, make_p = float(t.get("shot_prob", 0.0)), float(t.get("make_prob", 0.0))
        if noise < 0 or not (0 <= shot_p <= 1 and 0 <= make_p <= 1):
            raise ConfigError(f"template {t.get('name')}: noise/probabilities out of range", module="synth")
        phase = PhaseLabel(t["phase"])
        if phase is not PhaseLabel.OFFENSE and shot_p > 0 and phase is PhaseLabel.DEFENSE:
            raise ConfigError(f"template {t.get('name')}: defensive templates cannot shoot", module="synth")
        out.append(FormationTemplate(t["name"], phase, anchors, noise, shot_p, make_p))
    if not out:
        raise ConfigError("need at least one template", module="synth")
    return out


def _lognormal_params(mean: float, sd: float) -> tuple[float, float]:
    sigma2 = math.log(1.0 + (sd / mean) ** 2)
    return math.log(mean) - sigma2 / 2.0, math.sqrt(sigma2)


@dataclass
class GameTimeline:
    """Capture-time layout: active spans (with period) and excluded events."""

    active: list[tuple[int, int, int]]  # (start, end, period)
    events: list[tuple[str, int, int | None, int | None]]
    end_ms: int

    @property
    def active_ms(self) -> int:
        return sum(e - s for s, e, _ in self.active)

    def to_capture(self, tau: np.ndarray) -> np.ndarray:
        """Map active-clock times to capture times."""
        starts = np.cumsum([0] + [e - s for s, e, _ in self.active])
        idx = np.clip(np.searchsorted(starts, tau, side="right") - 1, 0, len(self.active) - 1)
        offs = np.array([s for s, _, _ in self.active])
        return (offs[idx] + (tau - starts[idx])).astype(np.int64)

    def to_active(self, t: np.ndarray):
        """(active-clock time, period) per capture time; period 0 when excluded."""
        t = np.asarray(t, dtype=np.int64)
        starts = np.array([s for s, _, _ in self.active])
        ends = np.array([e for _, e, _ in self.active])
        periods = np.array([p for _, _, p in self.active])
        before = np.concatenate([[0], np.cumsum(ends - starts)])[:-1]
        idx = np.searchsorted(starts, t, side="right") - 1
        ok = idx >= 0
        ok[ok] = t[ok] < ends[idx[ok]]
        tau = np.where(ok, before[np.maximum(idx, 0)] + t - starts[np.maximum(idx, 0)], -1)
        return tau, np.where(ok, periods[np.maximum(idx, 0)], 0)


def build_timeline(schedule: dict) -> GameTimeline:
    n_periods = int(schedule.get("periods", 4))
    if n_periods < 1:
        raise ConfigError("schedule needs at least one period", module="synth")
    period_ms = int(schedule["period_ms"])
    stops: dict[int, list[tuple[int, int, str]]] = {}
    for kind, key in ((EventKind.TIMEOUT, "timeouts"), (EventKind.FREE_THROW, "free_throws")):
        for st in schedule.get(key, []):
            p, at, dur = int(st["period"]), int(st["at_ms"]), int(st["duration_ms"])
            if not (1 <= p <= n_periods and 0 < at < period_ms and dur > 0):
                raise ConfigError(f"invalid {key} entry {st}", module="synth")
            stops.setdefault(p, []).append((at, dur, kind.value))
    events = []
    t = int(schedule.get("pre_match_ms", 0))
    if t <= 0:
        raise ConfigError("pre_match_ms must be positive", module="synth")
    events.append((EventKind.PRE_MATCH.value, 0, t, None))
    active = []
    for p in range(1, n_periods + 1):
        start = t
        clock = 0
        for at, dur, kind in sorted(stops.get(p, [])):
            active.append((t, t + at - clock, p))
            t += at - clock
            events.append((kind, t, t + dur, None))
            t += dur
            clock = at
        active.append((t, t + period_ms - clock, p))
        t += period_ms - clock
        events.append((EventKind.PERIOD_START.value, start, t, p))
        if p < n_periods:
            half = p == n_periods // 2 and n_periods >= 4
            key, kind = ("half_break_ms", EventKind.HALF_BREAK) if half else ("quarter_break_ms", EventKind.QUARTER_BREAK)
            gap = int(schedule.get(key, 0))
            if gap > 0:
                events.append((kind.value, t, t + gap, None))
                t += gap
    post = int(schedule.get("post_match_ms", 0))
    if post <= 0:
        raise ConfigError("post_match_ms must be positive", module="synth")
    events.append((EventKind.POST_MATCH.value, t, t + post, None))
    events.sort(key=lambda e: (e[1], e[0]))
    return GameTimeline(active, events, t + post)


@dataclass
class GroundTruth:
    """Template schedule on the active clock; query with capture times."""

    template_names: list[str]
    template_phases: list[PhaseLabel]
    dwell_start: np.ndarray  # active-clock ms
    dwell_template: np.ndarray
    timeline: GameTimeline
    shots: list[ShotEvent]
    shot_templates: list[int]
    blend_ms: int

    def template_at(self, t) -> np.ndarray:
        """Template index per capture time (-1 for excluded time)."""
        tau, period = self.timeline.to_active(t)
        idx = np.searchsorted(self.dwell_start, tau, side="right") - 1
        return np.where(period > 0, self.dwell_template[np.maximum(idx, 0)], -1)

    def in_blend(self, t) -> np.ndarray:
        tau, period = self.timeline.to_active(t)
        idx = np.maximum(np.searchsorted(self.dwell_start, tau, side="right") - 1, 0)
        return (period > 0) & (idx > 0) & (tau - self.dwell_start[idx] < self.blend_ms)

    def phase_at(self, t) -> list[PhaseLabel | None]:
        return [self.template_phases[i] if i >= 0 else None for i in self.template_at(t)]

    def to_dict(self) -> dict:
        return {
            "templates": [{"name": n, "phase": p.value} for n, p in zip(self.template_names, self.template_phases)],
            "blend_ms": self.blend_ms,
            "active": [list(a) for a in self.timeline.active],
            "dwell_start_ms": self.dwell_start.tolist(),
            "dwell_template": self.dwell_template.tolist(),
            "shot_templates": self.shot_templates,
        }


@dataclass
class SyntheticGame:
    tracking_csv: str
    events_csv: str
    shots_csv: str
    roster: list[str]
    truth: GroundTruth

    def write(self, out_dir) -> dict[str, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {
            "tracking": out / "tracking.csv",
            "events": out / "events.csv",
            "shots": out / "shots.csv",
            "roster": out / "roster.txt",
            "truth": out / "truth.json",
        }
        paths["tracking"].write_text(self.tracking_csv, encoding="utf-8")
        paths["events"].write_text(self.events_csv, encoding="utf-8")
        paths["shots"].write_text(self.shots_csv, encoding="utf-8")
        paths["roster"].write_text("".join(p + "\n" for p in self.roster), encoding="utf-8")
        paths["truth"].write_text(json.dumps(self.truth.to_dict(), indent=1) + "\n", encoding="utf-8")
        return paths


def generate_game(cfg: dict | None = None, seed: int = 0) -> SyntheticGame:
    cfg = default_config() if cfg is None else cfg
    templates = parse_templates(cfg)
    lineup = list(cfg["lineup"])
    if len(lineup) != 5 or len(set(lineup)) != 5:
        raise ConfigError("lineup must list 5 distinct players", module="synth")
    sample_ms = int(cfg.get("sample_ms", 40))
    blend_ms = int(cfg.get("blend_ms", 300))
    attack = AttackDirection.parse(cfg.get("attack_dir", "+x"))
    dwell_mean = float(cfg.get("dwell", {}).get("mean_ms", 2000))
    dwell_sd = float(cfg.get("dwell", {}).get("sd_ms", 800))
    if sample_ms < 1 or blend_ms < 0 or dwell_mean <= 0 or dwell_sd < 0:
        raise ConfigError("sample_ms, blend_ms and dwell must be positive", module="synth")
    timeline = build_timeline(cfg["schedule"])

    ss = np.random.SeedSequence(int(seed))
    rng_sched, rng_noise, rng_shot = (np.random.Generator(np.random.Philox(s)) for s in ss.spawn(3))

    # template schedule on the active clock
    mu, sigma = _lognormal_params(dwell_mean, dwell_sd)
    total = timeline.active_ms
    starts, ids = [0], [int(rng_sched.integers(len(templates)))]
    while True:
        nxt = starts[-1] + max(sample_ms, int(round(rng_sched.lognormal(mu, sigma))))
        if nxt >= total:
            break
        step = int(rng_sched.integers(1, len(templates))) if len(templates) > 1 else 0
        starts.append(nxt)
        ids.append((ids[-1] + step) % len(templates))
    dwell_start = np.array(starts, dtype=np.int64)
    dwell_template = np.array(ids, dtype=np.int64)

    anchors = np.stack([t.anchors for t in templates])
    noise_sd = np.array([t.noise_sd for t in templates])

    def formation(tau: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Noise-free positions (n, 5, 2) in +x attack orientation, and template index."""
        idx = np.searchsorted(dwell_start, tau, side="right") - 1
        cur = dwell_template[idx]
        pos = anchors[cur].copy()
        if blend_ms > 0:
            age = tau - dwell_start[idx]
            blending = (idx > 0) & (age < blend_ms)
            if blending.any():
                prev = dwell_template[np.maximum(idx - 1, 0)]
                w = (age / blend_ms)[:, None, None]
                mixed = anchors[prev] * (1 - w) + anchors[cur] * w
                pos[blending] = mixed[blending]
        return pos, cur

    # sensor samples: player j reports at j*7 mod sample_ms + n*sample_ms
    n_ticks = timeline.end_ms // sample_ms + 1
    base = np.arange(n_ticks, dtype=np.int64) * sample_ms
    offsets = (np.arange(5) * 7) % sample_ms
    t_samples = base[:, None] + offsets[None, :]
    t_flat = t_samples.ravel()
    tau, period = timeline.to_active(t_flat)
    active = period > 0
    xy = np.empty((t_flat.size, 2))
    player = np.tile(np.arange(5), n_ticks)
    form, cur = formation(np.maximum(tau, 0))
    xy[:] = form[np.arange(t_flat.size), player]
    sign = np.where(period >= 1, attack.sign_for(np.maximum(period, 1)), 1)
    xy[:, 0] *= sign
    noise = rng_noise.standard_normal((t_flat.size, 2)) * noise_sd[cur][:, None]
    xy += noise
    rest_x = (player - 2) * 150.0
    xy[~active, 0] = rest_x[~active]
    xy[~active, 1] = _BENCH_Y_CM
    xy = np.rint(xy)
    xy[:, 0] = np.clip(xy[:, 0], -MAX_ABS_X_CM, MAX_ABS_X_CM)
    xy[:, 1] = np.clip(xy[:, 1], -MAX_ABS_Y_CM, MAX_ABS_Y_CM)
    keep = t_flat < timeline.end_ms

    buf = io.StringIO()
    buf.write("timestamp_ms,player_id,x_cm,y_cm,z_cm\n")
    names = lineup
    for t, j, (x, y) in zip(t_flat[keep], player[keep], xy[keep].astype(np.int64)):
        buf.write(f"{t},{names[j]},{x},{y},0\n")
    tracking_csv = buf.getvalue()

    ev = io.StringIO()
    ev.write("kind,start_ms,end_ms,period_index\n")
    for kind, s, e, p in timeline.events:
        ev.write(f"{kind},{s},{'' if e is None else e},{'' if p is None else p}\n")

    # shots: Bernoulli per sensor tick on the active clock
    shot_tau = np.arange(0, total, sample_ms, dtype=np.int64)
    _, shot_cur = formation(shot_tau)
    probs = np.array([t.shot_prob for t in templates])[shot_cur]
    fire = rng_shot.random(shot_tau.size) < probs
    makes = rng_shot.random(shot_tau.size) < np.array([t.make_prob for t in templates])[shot_cur]
    shooters = rng_shot.integers(0, 5, shot_tau.size)
    shot_times = timeline.to_capture(shot_tau[fire])
    shots = [
        ShotEvent(int(t), bool(m), names[int(s)])
        for t, m, s in zip(shot_times, makes[fire], shooters[fire])
    ]
    sbuf = io.StringIO()
    write_shots(shots, sbuf)

    roster = sorted(set(lineup) | set(cfg.get("bench", [])))
    truth = GroundTruth(
        [t.name for t in templates],
        [t.phase for t in templates],
        dwell_start,
        dwell_template,
        timeline,
        shots,
        [int(c) for c in shot_cur[fire]],
        blend_ms,
    )
    return SyntheticGame(tracking_csv, ev.getvalue(), sbuf.getvalue(), roster, truth)


def adjusted_rand_index(a, b) -> float:
    """Hubert-Arabie adjusted Rand index from the contingency table."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise DataError("label arrays differ in length", module="synth")
    n = a.size
    if n < 2:
        return 1.0
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    table = np.zeros((ai.max() + 1, bi.max() + 1), dtype=np.int64)
    np.add.at(table, (ai, bi), 1)

    def comb2(x):
        x = np.asarray(x, dtype=np.float64)
        return float(np.sum(x * (x - 1) / 2.0))

    index = comb2(table)
    rows, cols = comb2(table.sum(axis=1)), comb2(table.sum(axis=0))
    expected = rows * cols / (n * (n - 1) / 2.0)
    max_index = (rows + cols) / 2.0
    if max_index == expected:
        return 1.0
    return (index - expected) / (max_index - expected)


def purity(truth, assignments) -> float:
    """Fraction of frames whose cluster's majority true template equals their own."""
    truth = np.asarray(truth)
    labels = np.asarray(assignments)
    if truth.shape != labels.shape:
        raise DataError("truth and assignments differ in length", module="synth")
    if truth.size == 0:
        return 1.0
    hit = 0
    for c in np.unique(labels):
        vals, counts = np.unique(truth[labels == c], return_counts=True)
        hit += int(counts.max())
    return hit / truth.size


@dataclass
class RecoveryMetrics:
    purity: float
    ari: float
    phase_confusion: np.ndarray  # rows: true phase (TR, D, O); cols: cluster majority label

    def to_dict(self) -> dict:
        return {"purity": self.purity, "ari": self.ari, "phase_confusion": self.phase_confusion.tolist()}


def evaluate_recovery(truth_templates, truth_phases, assignments, phase_table) -> RecoveryMetrics:
    """Score discovered clusters against generator ground truth, frame by frame."""
    truth_templates = np.asarray(truth_templates)
    labels = np.asarray(assignments, dtype=np.int64)
    if truth_templates.shape != labels.shape or len(truth_phases) != labels.size:
        raise DataError("truth and model cover different frames", module="synth")
    order = {p: i for i, p in enumerate(TABLE_ORDER)}
    conf = np.zeros((3, 3), dtype=np.int64)
    for p, c in zip(truth_phases, labels):
        conf[order[PhaseLabel(p)], order[phase_table.majority[c]]] += 1
    return RecoveryMetrics(purity(truth_templates, labels), adjusted_rand_index(truth_templates, labels), conf)
