"""``courtphase`` command line.

Exit codes: 0 ok, 2 configuration error, 3 data error, 4 internal error.
Failures print one JSON object (error, module, message, exit_code) to stderr.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import cluster, mds, phase, pipeline, plots, segment, shots, synth
from .errors import ConfigError, CourtphaseError
from .ingest import (
    DEFAULT_GRID_MS,
    DEFAULT_STALENESS_MS,
    FrameSeries,
    TrackingSchema,
    filter_active,
    parse_events,
    parse_tracking,
    resample_frames,
)
from .pipeline import stage

SEED_ENV = "COURTPHASE_SEED"


def _seed(value: int | None) -> int:
    if value is not None:
        return value
    env = os.environ.get(SEED_ENV)
    if env is None or env == "":
        return 0
    try:
        return int(env)
    except ValueError:
        raise ConfigError(f"{SEED_ENV} must be an integer, got {env!r}", module="cli_report") from None


def _open(path, module: str, mode: str = "r"):
    try:
        if "w" in mode:
            Path(path).parent.mkdir(parents=True, exist_ok=True)
        return open(path, mode, encoding="utf-8", newline="")
    except OSError as exc:
        raise ConfigError(f"cannot open {path}: {exc.strerror}", module=module) from None


def _load_json(path, module: str) -> dict:
    with _open(path, module) as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path} is not valid JSON: {exc}", module=module) from None


def _write(path, text: str) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(text, encoding="utf-8")


def _load_frames(path) -> FrameSeries:
    with _open(path, "ingest") as fh:
        return FrameSeries.from_csv(fh)


def cmd_ingest(args) -> int:
    with stage("ingest"):
        with _open(args.tracking, "ingest") as fh:
            parsed = parse_tracking(fh, TrackingSchema(max_malformed_fraction=args.max_malformed))
        with _open(args.events, "ingest") as fh:
            events = parse_events(fh)
        frames = resample_frames(filter_active(parsed.samples, events), args.grid_ms, args.staleness_ms, events)
        with _open(args.out, "ingest", "w") as fh:
            frames.to_csv(fh)
    print(f"{len(frames)} frames, {parsed.malformed} malformed rows of {parsed.total_rows}", file=sys.stderr)
    return 0


def cmd_stints(args) -> int:
    with stage("segment"):
        frames = _load_frames(args.frames)
        roster = pipeline.read_roster(args.roster)
        ext = segment.extract_stints_detailed(frames, roster, int(round(args.min_minutes * 60_000)))
        doc = {
            "grid_ms": frames.grid_ms,
            "min_duration_ms": int(round(args.min_minutes * 60_000)),
            "excluded_frames": {
                "overfull": ext.overfull_frames,
                "underfull": ext.underfull_frames,
                "short_stints": ext.short_stint_frames,
            },
            "stints": [s.to_dict() for s in ext.stints],
        }
        _write(args.out, json.dumps(doc, indent=1) + "\n")
        if args.features_dir:
            for i, s in enumerate(ext.stints, start=1):
                with _open(Path(args.features_dir) / f"features_{i}.csv", "segment", "w") as fh:
                    segment.dyad_features(s, frames).to_csv(fh)
    print(f"{len(ext.stints)} stint(s)", file=sys.stderr)
    return 0


def _load_features(path) -> segment.DyadFeatures:
    with _open(path, "segment") as fh:
        return segment.DyadFeatures.from_csv(fh)


def cmd_cluster(args) -> int:
    with stage("cluster"):
        features = _load_features(args.features)
        curve = pipeline.choose_k(features, args.k_min, args.k_max, args.threshold, _seed(args.seed), args.restarts)
        model = curve.models[curve.chosen_k]
        _write(args.out, json.dumps(cluster.model_to_json(model, features.frame_ms, curve), indent=1) + "\n")
    print(f"chosen k = {curve.chosen_k}", file=sys.stderr)
    return 0


def _model_assignments(path, features=None):
    doc = _load_json(path, "cluster")
    frame_ms, labels = cluster.load_assignments(doc)
    if features is not None and not np.array_equal(frame_ms, features.frame_ms):
        raise ConfigError("model and features cover different frames", module="mds")
    return doc, frame_ms, labels


def cmd_mds(args) -> int:
    with stage("mds"):
        features = _load_features(args.features)
        doc, _, labels = _model_assignments(args.model, features)
        matrices, embeddings, game = mds.cluster_embeddings(labels, features, int(doc["k"]), align=args.align)
        _write(args.out, json.dumps(mds.mds_to_json(matrices, embeddings, game, features.lineup), indent=1) + "\n")
    return 0


def cmd_phase(args) -> int:
    with stage("phase"):
        frames = _load_frames(args.frames)
        doc, frame_ms, labels = _model_assignments(args.model)
        rows = np.searchsorted(frames.times, frame_ms)
        if np.any(rows >= len(frames)) or np.any(frames.times[np.minimum(rows, len(frames) - 1)] != frame_ms):
            raise ConfigError("model references frames missing from the frames file", module="phase")
        pos = frames.positions[rows]
        if np.isnan(pos[:, :, 0]).all(axis=1).any():
            raise ConfigError("model frame without players", module="phase")
        # mean over the players present; stint frames carry exactly the lineup
        counts = (~np.isnan(pos[:, :, 0])).sum(axis=1)
        mean_x = np.nansum(pos[:, :, 0], axis=1) / counts
        attack = phase.AttackDirection.parse(args.attack_dir)
        codes, table, tm, stats = pipeline.phase_analysis(
            frame_ms, labels, mean_x, frames.periods[rows], int(doc["k"]), frames.grid_ms, args.band_cm, attack
        )
        out = pipeline.phase_to_json(frame_ms, labels, codes, table, tm, stats)
        _write(args.out, json.dumps(out, indent=1) + "\n")
    return 0


def cmd_shots(args) -> int:
    with stage("shots"):
        with _open(args.shots, "shots") as fh:
            events = shots.parse_shots(fh)
        doc = _load_json(args.phase, "shots")
        frames = doc["frames"]
        frame_ms = np.array([f["frame_ms"] for f in frames], dtype=np.int64)
        labels = np.array([f["cluster"] for f in frames], dtype=np.int64)
        attached = shots.attach_shots(events, frame_ms, labels, args.tolerance_ms)
        report = shots.shot_report(attached, [s.made for s in events])
        _write(args.out, json.dumps(report.to_dict(), indent=1) + "\n")
    return 0


def cmd_synth(args) -> int:
    with stage("synth"):
        cfg = synth.load_config(args.config) if args.config else synth.default_config()
        if args.noise_sd is not None:
            for t in cfg["templates"]:
                t["noise_sd"] = args.noise_sd
        game = synth.generate_game(cfg, _seed(args.seed))
        game.write(args.out_dir)
    return 0


def cmd_run_all(args) -> int:
    if args.config:
        cfg = pipeline.RunConfig.from_json(args.config)
    else:
        missing = [n for n in ("tracking", "events", "roster", "out_dir") if getattr(args, n) is None]
        if missing:
            raise ConfigError(f"missing required option(s): {', '.join('--' + m.replace('_', '-') for m in missing)}",
                              module="cli_report")
        cfg = pipeline.RunConfig(
            tracking=args.tracking, events=args.events, roster=args.roster, out_dir=args.out_dir, shots=args.shots,
            grid_ms=args.grid_ms, staleness_ms=args.staleness_ms, min_minutes=args.min_minutes,
            k_min=args.k_min, k_max=args.k_max, threshold=args.threshold, seed=_seed(args.seed),
            restarts=args.restarts, band_cm=args.band_cm, attack_dir=args.attack_dir,
            tolerance_ms=args.tolerance_ms, align_mds=args.align, n_jobs=args.jobs,
        )
    manifest = pipeline.run_all(cfg)
    print(json.dumps({"status": "ok", "artifacts": len(manifest["artifacts"]), "out_dir": cfg.out_dir}))
    return 0


def cmd_plot(args) -> int:
    with stage("cli_report"):
        doc = _load_json(args.mds, "cli_report")
        matrices, embeddings, game = mds.mds_from_json(doc)
        labels = None
        if args.phase:
            labels = _load_json(args.phase, "cli_report")["cluster_phase_table"]["majority"]
        lineup = doc.get("lineup", [])
        out = Path(args.out_dir)
        _write(out / "profile.svg", plots.profile_plot(matrices, game, lineup, labels))
        _write(out / "mds.svg", plots.mds_plot(embeddings, lineup, labels))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="courtphase", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("ingest", help="filter inactive intervals and resample tracking onto a frame grid")
    s.add_argument("--tracking", required=True)
    s.add_argument("--events", required=True)
    s.add_argument("--grid-ms", type=int, default=DEFAULT_GRID_MS)
    s.add_argument("--staleness-ms", type=int, default=DEFAULT_STALENESS_MS)
    s.add_argument("--max-malformed", type=float, default=0.01, help="tolerated malformed-row fraction")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_ingest)

    s = sub.add_parser("stints", help="extract qualifying five-player lineups")
    s.add_argument("--frames", required=True)
    s.add_argument("--roster", required=True, help="text file, one player id per line")
    s.add_argument("--min-minutes", type=float, default=5.0)
    s.add_argument("--out", required=True)
    s.add_argument("--features-dir", help="also write features_<n>.csv per stint here")
    s.set_defaults(func=cmd_stints)

    s = sub.add_parser("cluster", help="k-means over dyad features with BD/TD k selection")
    s.add_argument("--features", required=True)
    s.add_argument("--k-min", type=int, default=2)
    s.add_argument("--k-max", type=int, default=10)
    s.add_argument("--threshold", type=float, default=cluster.DEFAULT_THRESHOLD)
    s.add_argument("--seed", type=int, default=None, help=f"falls back to ${SEED_ENV}, then 0")
    s.add_argument("--restarts", type=int, default=cluster.DEFAULT_RESTARTS)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_cluster)

    s = sub.add_parser("mds", help="per-cluster mean distance matrices and 2-D MDS")
    s.add_argument("--model", required=True)
    s.add_argument("--features", required=True)
    s.add_argument("--align", action="store_true", help="Procrustes-align panels to cluster 1")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_mds)

    s = sub.add_parser("phase", help="offense/defense/transition labels, phase table, switch matrix")
    s.add_argument("--model", required=True)
    s.add_argument("--frames", required=True)
    s.add_argument("--band-cm", type=float, default=phase.DEFAULT_BAND_CM)
    s.add_argument("--attack-dir", default="+x", help="half attacked in periods 1-2: +x or -x")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_phase)

    s = sub.add_parser("shots", help="shooting performance per cluster")
    s.add_argument("--shots", required=True)
    s.add_argument("--phase", required=True)
    s.add_argument("--tolerance-ms", type=int, default=shots.DEFAULT_TOLERANCE_MS)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_shots)

    s = sub.add_parser("synth", help="generate a synthetic game with ground truth")
    s.add_argument("--config", help="JSON config; built-in six-template default when omitted")
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--noise-sd", type=float, default=None, help="override every template's noise sd (cm)")
    s.add_argument("--out-dir", required=True)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("run-all", help="full pipeline with manifest")
    s.add_argument("--config", help="JSON RunConfig; replaces the options below")
    s.add_argument("--tracking")
    s.add_argument("--events")
    s.add_argument("--roster")
    s.add_argument("--shots")
    s.add_argument("--out-dir")
    s.add_argument("--grid-ms", type=int, default=DEFAULT_GRID_MS)
    s.add_argument("--staleness-ms", type=int, default=DEFAULT_STALENESS_MS)
    s.add_argument("--min-minutes", type=float, default=5.0)
    s.add_argument("--k-min", type=int, default=2)
    s.add_argument("--k-max", type=int, default=10)
    s.add_argument("--threshold", type=float, default=cluster.DEFAULT_THRESHOLD)
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--restarts", type=int, default=cluster.DEFAULT_RESTARTS)
    s.add_argument("--band-cm", type=float, default=phase.DEFAULT_BAND_CM)
    s.add_argument("--attack-dir", default="+x")
    s.add_argument("--tolerance-ms", type=int, default=shots.DEFAULT_TOLERANCE_MS)
    s.add_argument("--align", action="store_true")
    s.add_argument("--jobs", type=int, default=1, help="stints analysed concurrently")
    s.set_defaults(func=cmd_run_all)

    s = sub.add_parser("plot", help="render profile and MDS SVGs from an mds.json")
    s.add_argument("--mds", required=True)
    s.add_argument("--phase", help="phase.json for panel labels")
    s.add_argument("--out-dir", required=True)
    s.set_defaults(func=cmd_plot)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CourtphaseError as exc:
        print(json.dumps(exc.to_dict()), file=sys.stderr)
        return exc.exit_code
    except Exception as exc:  # pragma: no cover - last-resort guard
        err = CourtphaseError(f"{type(exc).__name__}: {exc}", module=None)
        print(json.dumps(err.to_dict()), file=sys.stderr)
        return err.exit_code


if __name__ == "__main__":
    sys.exit(main())
