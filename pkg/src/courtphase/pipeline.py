"""End-to-end run: ingest -> stints -> cluster -> mds -> phase -> shots, with a manifest."""
from __future__ import annotations

import contextlib
import hashlib
import io
import json
import logging
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import cluster, mds, phase, plots, segment, tables
from . import shots as shot_mod
from .errors import ConfigError, CourtphaseError, DataError
from .ingest import (
    DEFAULT_GRID_MS,
    DEFAULT_STALENESS_MS,
    FrameSeries,
    filter_active,
    parse_events,
    parse_tracking,
    resample_frames,
)

log = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"


@dataclass
class RunConfig:
    tracking: str
    events: str
    roster: str
    out_dir: str
    shots: str | None = None
    grid_ms: int = DEFAULT_GRID_MS
    staleness_ms: int = DEFAULT_STALENESS_MS
    min_minutes: float = 5.0
    k_min: int = 2
    k_max: int = 10
    threshold: float = cluster.DEFAULT_THRESHOLD
    seed: int = 0
    restarts: int = cluster.DEFAULT_RESTARTS
    band_cm: float = phase.DEFAULT_BAND_CM
    attack_dir: str = "+x"
    tolerance_ms: int = shot_mod.DEFAULT_TOLERANCE_MS
    align_mds: bool = False
    n_jobs: int = 1

    @classmethod
    def from_json(cls, path) -> "RunConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read run config {path}: {exc}", module="cli_report") from None
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown run config keys: {sorted(unknown)}", module="cli_report")
        return cls(**data)

    def validate(self) -> None:
        for attr, module in (("tracking", "ingest"), ("events", "ingest"), ("roster", "segment"), ("shots", "shots")):
            path = getattr(self, attr)
            if path is None:
                continue
            if not Path(path).is_file():
                raise ConfigError(f"{attr} file not found: {path}", module=module)
        checks = [
            (self.grid_ms >= 1, "grid_ms must be >= 1", "ingest"),
            (self.staleness_ms >= self.grid_ms, "staleness_ms must be >= grid_ms", "ingest"),
            (self.min_minutes > 0, "min_minutes must be positive", "segment"),
            (1 <= self.k_min < self.k_max, "need 1 <= k_min < k_max", "cluster"),
            (0 < self.threshold < 1, "threshold must lie in (0, 1)", "cluster"),
            (self.seed >= 0, "seed must be non-negative", "cluster"),
            (self.restarts >= 1, "restarts must be >= 1", "cluster"),
            (self.band_cm >= 0, "band_cm must be >= 0", "phase"),
            (self.tolerance_ms >= 0, "tolerance_ms must be >= 0", "shots"),
            (self.n_jobs >= 1, "n_jobs must be >= 1", "cli_report"),
        ]
        for ok, msg, module in checks:
            if not ok:
                raise ConfigError(msg, module=module)
        phase.AttackDirection.parse(self.attack_dir)


@contextlib.contextmanager
def stage(name: str):
    """Attribute any failure inside the block to module ``name``."""
    try:
        yield
    except CourtphaseError as exc:
        if exc.module is None:
            exc.module = name
        raise
    except (OSError, UnicodeDecodeError) as exc:
        raise DataError(f"{type(exc).__name__}: {exc}", module=name) from exc
    except Exception as exc:
        raise CourtphaseError(f"internal error: {type(exc).__name__}: {exc}", module=name) from exc


def read_roster(path) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        ids = [ln.split("#", 1)[0].strip() for ln in fh]
    ids = [i for i in ids if i]
    if not ids:
        raise DataError(f"roster {path} lists no players", module="segment")
    return ids


def choose_k(features, k_min: int, k_max: int, threshold: float, seed: int, restarts: int, n_jobs: int = 1):
    """Fit the BD/TD curve over the feasible part of [k_min, k_max] and pick k.

    With fewer distinct frames than ``k_max`` the range is clipped; if fewer
    than two k values remain, the single feasible k is used.
    """
    if not 1 <= k_min <= k_max:
        raise ConfigError(f"need 1 <= k_min <= k_max, got {k_min}..{k_max}", module="cluster")
    distinct = cluster.n_distinct(features)
    if distinct == 0:
        raise DataError("stint has no frames", module="cluster")
    hi = min(k_max, distinct)
    lo = min(k_min, hi)
    if hi > lo:
        curve = cluster.bd_td_curve(features, lo, hi, seed, restarts, n_jobs=n_jobs)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", cluster.SelectionWarning)
            curve.chosen_k = cluster.select_k(curve, threshold)
        for w in caught:
            log.warning("%s", w.message)
    else:
        log.warning("only %d distinct frame(s); k fixed at %d", distinct, lo)
        model = cluster.kmeans(features, lo, seed, restarts, n_jobs=n_jobs)
        curve = cluster.KSelectionCurve([(lo, model.bd_td)], chosen_k=lo, models={lo: model})
    curve.threshold = threshold
    return curve


@dataclass
class StintAnalysis:
    index: int
    stint: segment.Stint
    features: segment.DyadFeatures
    curve: cluster.KSelectionCurve
    model: cluster.ClusterModel
    matrices: list
    embeddings: list
    game_average: mds.MeanDistanceMatrix
    frame_codes: np.ndarray
    phase_table: phase.ClusterPhaseTable
    transitions: phase.TransitionMatrix
    switches: phase.SwitchStats
    shot_clusters: list = field(default_factory=list)
    shot_report: shot_mod.ShotReport | None = None


def stint_contiguity(frame_ms: np.ndarray, grid_ms: int) -> np.ndarray:
    contiguous = np.zeros(frame_ms.size, dtype=bool)
    contiguous[1:] = np.diff(frame_ms) == grid_ms
    return contiguous


def phase_analysis(frame_ms, assignments, mean_x, periods, k, grid_ms, band_cm, attack):
    codes = phase.label_frames(mean_x, periods, band_cm, attack)
    table = phase.cluster_phase_table(assignments, codes, k)
    tm = phase.transition_matrix(assignments, stint_contiguity(frame_ms, grid_ms), k)
    stats = phase.switch_rate(tm.switch_count, frame_ms.size * grid_ms)
    return codes, table, tm, stats


def phase_to_json(frame_ms, assignments, codes, table, tm, stats) -> dict:
    return {
        "frames": [
            {"frame_ms": int(t), "cluster": int(c), "label": phase.TABLE_ORDER[int(l)].value}
            for t, c, l in zip(frame_ms, assignments, codes)
        ],
        "cluster_phase_table": table.to_dict(),
        "transition_matrix": tm.to_dict(),
        "switch_stats": stats.to_dict(),
    }


def analyze_stint(index, stint, frames: FrameSeries, shot_events, cfg: RunConfig) -> StintAnalysis:
    with stage("segment"):
        features = segment.dyad_features(stint, frames)
        rows = np.searchsorted(frames.times, stint.frame_ms)
        mean_x = segment.stint_mean_x(stint, frames)
        periods = frames.periods[rows]
    with stage("cluster"):
        curve = choose_k(features, cfg.k_min, cfg.k_max, cfg.threshold, cfg.seed, cfg.restarts, cfg.n_jobs)
        model = curve.models[curve.chosen_k]
    with stage("mds"):
        matrices, embeddings, game = mds.cluster_embeddings(model.assignments, features, model.k, align=cfg.align_mds)
    with stage("phase"):
        attack = phase.AttackDirection.parse(cfg.attack_dir)
        codes, table, tm, stats = phase_analysis(
            features.frame_ms, model.assignments, mean_x, periods, model.k, frames.grid_ms, cfg.band_cm, attack
        )
    result = StintAnalysis(index, stint, features, curve, model, matrices, embeddings, game, codes, table, tm, stats)
    if shot_events is not None:
        with stage("shots"):
            result.shot_clusters = shot_mod.attach_shots(shot_events, features.frame_ms, model.assignments, cfg.tolerance_ms)
            result.shot_report = shot_mod.shot_report(result.shot_clusters, [s.made for s in shot_events])
    return result


def _json_text(doc) -> str:
    return json.dumps(doc, indent=1) + "\n"


def stint_artifacts(a: StintAnalysis) -> dict[str, str]:
    """Relative path -> file content for one stint."""
    pre = f"stint_{a.index + 1}"
    labels = [m.value for m in a.phase_table.majority]
    lineup = a.stint.lineup
    files = {
        f"{pre}/features.csv": _csv(a.features.to_csv),
        f"{pre}/model.json": _json_text(cluster.model_to_json(a.model, a.features.frame_ms, a.curve)),
        f"{pre}/mds.json": _json_text(mds.mds_to_json(a.matrices, a.embeddings, a.game_average, lineup)),
        f"{pre}/phase.json": _json_text(
            phase_to_json(a.features.frame_ms, a.model.assignments, a.frame_codes, a.phase_table, a.transitions, a.switches)
        ),
        f"{pre}/phase_table.csv": tables.phase_table_csv(a.phase_table),
        f"{pre}/phase_table.txt": tables.phase_table_text(a.phase_table),
        f"{pre}/transitions.csv": tables.transition_csv(a.transitions),
        f"{pre}/transitions.txt": tables.transition_text(a.transitions),
        f"{pre}/profile.svg": plots.profile_plot(a.matrices, a.game_average, lineup, labels),
        f"{pre}/mds.svg": plots.mds_plot(a.embeddings, lineup, labels),
    }
    if a.shot_report is not None:
        files[f"{pre}/shots.json"] = _json_text(a.shot_report.to_dict())
    return files


def _csv(writer) -> str:
    buf = io.StringIO()
    writer(buf)
    return buf.getvalue()


def render_report(analyses: list[StintAnalysis], n_frames: int, malformed: int) -> str:
    lines = ["courtphase report", "=================", f"frames: {n_frames}  malformed tracking rows: {malformed}", ""]
    for a in analyses:
        s = a.stint
        lines.append(f"Stint {a.index + 1}: {', '.join(s.lineup)}")
        lines.append(f"  duration {s.total_duration_ms / 1000:.1f} s over {len(s.intervals)} interval(s)")
        curve = "  ".join(f"k={k}:{v:.3f}" for k, v in a.curve.entries)
        lines.append(f"  BD/TD {curve}")
        lines.append(f"  chosen k = {a.curve.chosen_k} (threshold {a.curve.threshold:.2f})")
        sizes = a.model.cluster_sizes() / max(a.model.assignments.size, 1) * 100
        lines.append("  cluster sizes % " + "  ".join(f"C{c + 1}:{v:.2f}" for c, v in enumerate(sizes)))
        spread = "  ".join(f"C{m.cluster_id + 1}:{m.off_diagonal_mean():.0f}" for m in a.matrices)
        lines.append(f"  mean dyad distance cm {spread}")
        lines.append("")
        lines.extend("  " + ln for ln in tables.phase_table_text(a.phase_table).splitlines())
        lines.append("")
        lines.extend("  " + ln for ln in tables.transition_text(a.transitions).splitlines())
        sps = a.switches.seconds_per_switch
        lines.append(
            f"  switch rate {a.switches.rate_per_s:.4f}/s, "
            + (f"one switch every {sps:.3f} s" if sps is not None else "no switches")
        )
        if a.shot_report is not None:
            r = a.shot_report
            pct = f"{r.percentage:.2f}%" if r.percentage is not None else "n/a"
            lines.append(f"  shots {r.made}/{r.attempts} ({pct}), unmatched {r.unmatched}")
            for c, (att, made) in sorted(r.per_cluster.items()):
                lines.append(f"    C{c + 1}: {made}/{att} ({100.0 * made / att:.2f}%)")
        lines.append("")
    return "\n".join(lines)


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _prepare_out_dir(out: Path) -> None:
    if not out.exists():
        out.mkdir(parents=True)
        return
    manifest = out / MANIFEST_NAME
    entries = list(out.iterdir())
    if not entries:
        return
    if not manifest.is_file():
        raise ConfigError(f"output directory {out} is not empty and holds no previous manifest", module="cli_report")
    try:
        previous = json.loads(manifest.read_text(encoding="utf-8"))
        listed = {a["path"] for a in previous["artifacts"]}
    except (ValueError, KeyError, TypeError):
        raise ConfigError(f"unreadable manifest in {out}", module="cli_report") from None
    for p in sorted(out.rglob("*"), reverse=True):
        rel = p.relative_to(out).as_posix()
        if p.is_file():
            if rel != MANIFEST_NAME and rel not in listed:
                raise ConfigError(f"output directory holds foreign file {rel}", module="cli_report")
    for rel in sorted(listed):
        (out / rel).unlink(missing_ok=True)
    manifest.unlink()
    for p in sorted(out.rglob("*"), reverse=True):
        if p.is_dir() and not any(p.iterdir()):
            p.rmdir()


def run_all(cfg: RunConfig) -> dict:
    """Run the full pipeline; returns the manifest document that was written."""
    with stage("cli_report"):
        cfg.validate()
    out = Path(cfg.out_dir)

    with stage("ingest"):
        with open(cfg.tracking, encoding="utf-8", newline="") as fh:
            parsed = parse_tracking(fh)
        with open(cfg.events, encoding="utf-8", newline="") as fh:
            events = parse_events(fh)
        active = filter_active(parsed.samples, events)
        frames = resample_frames(active, cfg.grid_ms, cfg.staleness_ms, events)
        if len(frames) == 0:
            raise DataError("no frames left after filtering", module="ingest")
    with stage("segment"):
        roster = read_roster(cfg.roster)
        extraction = segment.extract_stints_detailed(frames, roster, int(round(cfg.min_minutes * 60_000)))
        if not extraction.stints:
            raise DataError(f"no lineup reaches {cfg.min_minutes:g} minutes", module="segment")
    shot_events = None
    if cfg.shots:
        with stage("shots"):
            with open(cfg.shots, encoding="utf-8", newline="") as fh:
                shot_events = shot_mod.parse_shots(fh)

    jobs = list(enumerate(extraction.stints))
    if cfg.n_jobs > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=cfg.n_jobs) as pool:
            analyses = list(pool.map(lambda j: analyze_stint(j[0], j[1], frames, shot_events, cfg), jobs))
    else:
        analyses = [analyze_stint(i, s, frames, shot_events, cfg) for i, s in jobs]

    with stage("cli_report"):
        files: dict[str, str] = {"frames.csv": _csv(frames.to_csv)}
        files["stints.json"] = _json_text(
            {
                "grid_ms": frames.grid_ms,
                "min_duration_ms": int(round(cfg.min_minutes * 60_000)),
                "excluded_frames": {
                    "overfull": extraction.overfull_frames,
                    "underfull": extraction.underfull_frames,
                    "short_stints": extraction.short_stint_frames,
                },
                "stints": [s.to_dict() for s in extraction.stints],
            }
        )
        for a in analyses:
            files.update(stint_artifacts(a))
        files["report.txt"] = render_report(analyses, len(frames), parsed.malformed)

        _prepare_out_dir(out)
        artifacts = []
        for rel in sorted(files):
            data = files[rel].encode("utf-8")
            path = out / rel
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_bytes(data)
            artifacts.append({"path": rel, "bytes": len(data), "sha256": _sha256(data)})
        params = asdict(cfg)
        inputs = {}
        for key in ("tracking", "events", "roster", "shots"):
            p = params.pop(key)
            if p is not None:
                inputs[key] = {"name": os.path.basename(p), "sha256": _sha256(Path(p).read_bytes())}
        params.pop("out_dir")
        params.pop("n_jobs")
        manifest = {"format": "courtphase-manifest/1", "inputs": inputs, "parameters": params, "artifacts": artifacts}
        (out / MANIFEST_NAME).write_text(_json_text(manifest), encoding="utf-8")
    return manifest
