"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v`` (or execute this file).
"""
import json
import time

import numpy as np
import pytest

from courtphase import cli, mds, phase, shots
from helpers import (
    PHASE_SHARE_COUNTS,
    PUBLISHED_PHASE_SHARES,
    PUBLISHED_SWITCH_PERCENT,
    SHOT_FIXTURE,
    SWITCH_COUNTS,
    brute_force_wcss_k2,
    eulerian_sequence,
    synthetic_run,
)
from courtphase.cluster import kmeans

pytestmark = pytest.mark.acceptance

RECOVERY_SEEDS = range(20)
RECOVERY_NOISE_SD = 40.0


def test_kmeans_matches_exhaustive_partition(record):
    rng = np.random.default_rng(20240601)
    worst, t0 = 0.0, time.perf_counter()
    for i in range(100):
        n = int(rng.integers(3, 11))
        pts = rng.normal(size=(n, 10)) * rng.uniform(0.5, 5.0) + rng.normal(size=10)
        model = kmeans(pts, 2, seed=i, restarts=20)
        worst = max(worst, abs(model.wcss - brute_force_wcss_k2(pts)))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-9 and elapsed < 10.0
    assert record("k-means oracle", ok, f"max |wcss - exhaustive| = {worst:.2e} over 100 instances, {elapsed:.2f} s")


def test_k_selection_recovers_six_templates(record):
    chosen = [synthetic_run(s, RECOVERY_NOISE_SD).chosen_k for s in RECOVERY_SEEDS]
    hits = sum(k == 6 for k in chosen)
    assert record("k-selection recovery", hits >= 18, f"k=6 on {hits}/20 seeds (noise sd 40 cm); chosen {chosen}")


def test_mds_reconstructs_planar_distances(record):
    rng = np.random.default_rng(7)
    worst_d, worst_share = 0.0, 0.0
    for _ in range(200):
        pts = rng.uniform(-1400, 1400, size=(5, 2))
        d = np.sqrt(((pts[:, None] - pts[None]) ** 2).sum(-1))
        emb = mds.classical_mds(d, 2)
        rec = np.sqrt(((emb.coords[:, None] - emb.coords[None]) ** 2).sum(-1))
        worst_d = max(worst_d, float(np.abs(rec - d).max()))
        worst_share = max(worst_share, abs(emb.strain_share - 1.0))
    ok = worst_d <= 1e-6 and worst_share <= 1e-9
    assert record("MDS reconstruction", ok, f"max distance error {worst_d:.2e} cm, max |share - 1| {worst_share:.2e}")


def test_qualitative_spacing_by_phase(record):
    hits = sum(synthetic_run(s, RECOVERY_NOISE_SD).transition_widest_defense_tightest() for s in RECOVERY_SEEDS)
    assert record("qualitative recovery", hits >= 18, f"TR widest and D tightest on {hits}/20 seeds")


def test_table_arithmetic_fixtures(record):
    k = PHASE_SHARE_COUNTS.shape[0]
    assignments = np.repeat(np.arange(k), PHASE_SHARE_COUNTS.sum(axis=1))
    codes = np.concatenate([np.repeat([0, 1, 2], row) for row in PHASE_SHARE_COUNTS])
    table = phase.cluster_phase_table(assignments, codes, k)
    col_sums_ok = np.all(np.abs(table.percent.sum(axis=1) - 100.0) <= 1e-9)
    shares_ok = np.array_equal(np.round(table.percent, 2), PUBLISHED_PHASE_SHARES)

    tm = phase.transition_matrix(eulerian_sequence(SWITCH_COUNTS), k=k)
    switch_ok = (
        np.array_equal(tm.counts, SWITCH_COUNTS)
        and np.all(np.diag(tm.percent) == 0.0)
        and np.all(np.abs(tm.percent.sum(axis=0) - 100.0) <= 1e-9)
        and np.array_equal(np.round(tm.percent, 2), PUBLISHED_SWITCH_PERCENT)
    )

    report = shots.shot_report([c for c, _ in SHOT_FIXTURE], [m for _, m in SHOT_FIXTURE])
    shots_ok = (
        report.attempts == 15
        and report.made == 7
        and round(report.percentage, 2) == 46.67
        and report.per_cluster[5] == (8, 5)
        and report.cluster_percentage(5) == 62.5
    )
    ok = bool(col_sums_ok and shares_ok and switch_ok and shots_ok)
    detail = f"phase shares {col_sums_ok and shares_ok}, switch matrix {switch_ok}, shots {shots_ok}"
    assert record("table-arithmetic fixtures", ok, detail)


def test_switch_rate_fixture(record):
    stats = phase.switch_rate(309, 501_000)
    ok = abs(stats.rate_per_s - 0.6168) <= 1e-3 and abs(stats.seconds_per_switch - 1.621) <= 1e-3
    detail = f"{stats.rate_per_s:.4f} switches/s, {stats.seconds_per_switch:.4f} s per switch"
    assert record("switch-rate fixture", ok, detail)


def test_run_all_is_deterministic(tmp_path, record, capsys):
    game = synthetic_run(0, RECOVERY_NOISE_SD).game
    paths = game.write(tmp_path / "game")
    manifests = []
    for name in ("run_a", "run_b"):
        argv = [
            "run-all", "--tracking", str(paths["tracking"]), "--events", str(paths["events"]),
            "--roster", str(paths["roster"]), "--shots", str(paths["shots"]),
            "--out-dir", str(tmp_path / name), "--seed", "11", "--k-max", "8",
        ]
        assert cli.main(argv) == 0
        manifests.append((tmp_path / name / "manifest.json").read_bytes())
    capsys.readouterr()
    n_artifacts = len(json.loads(manifests[0])["artifacts"])
    ok = manifests[0] == manifests[1]
    assert record("run-all determinism", ok, f"manifests byte-identical: {ok} ({n_artifacts} artifacts)")


def test_attack_flip_swaps_offense_and_defense(record):
    failures = 0
    for seed in range(20):
        rng = np.random.default_rng(seed)
        mean_x = rng.uniform(-1500, 1500, 1000)
        mean_x[:20] = rng.choice([-400.0, 400.0, 0.0, -400.0001, 400.0001], 20)
        periods = rng.integers(1, 5, 1000)
        attack = phase.AttackDirection(int(rng.choice([-1, 1])))
        a = np.bincount(phase.label_frames(mean_x, periods, 400.0, attack), minlength=3)
        b = np.bincount(phase.label_frames(mean_x, periods, 400.0, attack.flipped()), minlength=3)
        failures += not (a[0] == b[0] and a[1] == b[2] and a[2] == b[1])
    assert record("phase-label flip", failures == 0, f"{20 - failures}/20 seeds swap O/D and keep TR (1000 frames each)")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
