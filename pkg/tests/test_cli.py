import json
import subprocess
import sys

import pytest

from courtphase import cli, pipeline, synth


@pytest.fixture(scope="module")
def game_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("game")
    synth.generate_game(synth.default_config(period_ms=40_000), seed=2).write(out)
    return out


def _run_all(game_dir, out, *extra):
    return cli.main([
        "run-all", "--tracking", str(game_dir / "tracking.csv"), "--events", str(game_dir / "events.csv"),
        "--roster", str(game_dir / "roster.txt"), "--shots", str(game_dir / "shots.csv"),
        "--out-dir", str(out), "--min-minutes", "1", "--k-max", "8", "--restarts", "5", *extra,
    ])


@pytest.fixture(scope="module")
def run_dir(game_dir, tmp_path_factory):
    out = tmp_path_factory.mktemp("run") / "out"
    assert _run_all(game_dir, out, "--seed", "4") == 0
    return out


def test_run_all_writes_full_artifact_set(run_dir):
    manifest = json.loads((run_dir / "manifest.json").read_text())
    paths = {a["path"] for a in manifest["artifacts"]}
    expected_stint = {
        "features.csv", "model.json", "mds.json", "phase.json", "phase_table.csv", "phase_table.txt",
        "transitions.csv", "transitions.txt", "profile.svg", "mds.svg", "shots.json",
    }
    assert {"frames.csv", "stints.json", "report.txt"} <= paths
    assert {f"stint_1/{n}" for n in expected_stint} <= paths
    on_disk = {p.relative_to(run_dir).as_posix() for p in run_dir.rglob("*") if p.is_file()}
    assert on_disk == paths | {"manifest.json"}
    assert manifest["parameters"]["seed"] == 4 and "out_dir" not in manifest["parameters"]


def test_missing_events_names_ingest(game_dir, tmp_path, capsys):
    code = cli.main(["run-all", "--tracking", str(game_dir / "tracking.csv"), "--events", str(tmp_path / "nope.csv"),
                     "--roster", str(game_dir / "roster.txt"), "--out-dir", str(tmp_path / "o")])
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert code == 2 and err["module"] == "ingest" and err["exit_code"] == 2


def test_data_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "t.csv"
    bad.write_text("timestamp_ms,player_id\n1,a\n")
    ev = tmp_path / "e.csv"
    ev.write_text("kind,start_ms,end_ms,period_index\n")
    assert cli.main(["ingest", "--tracking", str(bad), "--events", str(ev), "--out", str(tmp_path / "f.csv")]) == 3
    assert json.loads(capsys.readouterr().err)["error"] == "SchemaError"


def test_rerun_replaces_only_manifest_files(game_dir, run_dir, tmp_path):
    out = tmp_path / "o"
    assert _run_all(game_dir, out, "--seed", "4") == 0
    assert (out / "manifest.json").read_bytes() == (run_dir / "manifest.json").read_bytes()
    assert _run_all(game_dir, out, "--seed", "4") == 0
    (out / "stray.txt").write_text("x")
    assert _run_all(game_dir, out, "--seed", "4") == 2


def test_stepwise_commands_match_run_all(game_dir, run_dir, tmp_path, monkeypatch):
    monkeypatch.setenv("COURTPHASE_SEED", "4")
    s = tmp_path
    steps = [
        ["ingest", "--tracking", str(game_dir / "tracking.csv"), "--events", str(game_dir / "events.csv"), "--out", str(s / "frames.csv")],
        ["stints", "--frames", str(s / "frames.csv"), "--roster", str(game_dir / "roster.txt"), "--min-minutes", "1",
         "--out", str(s / "stints.json"), "--features-dir", str(s)],
        ["cluster", "--features", str(s / "features_1.csv"), "--k-max", "8", "--restarts", "5", "--out", str(s / "model.json")],
        ["mds", "--model", str(s / "model.json"), "--features", str(s / "features_1.csv"), "--out", str(s / "mds.json")],
        ["phase", "--model", str(s / "model.json"), "--frames", str(s / "frames.csv"), "--out", str(s / "phase.json")],
        ["shots", "--shots", str(game_dir / "shots.csv"), "--phase", str(s / "phase.json"), "--out", str(s / "shots.json")],
        ["plot", "--mds", str(s / "mds.json"), "--phase", str(s / "phase.json"), "--out-dir", str(s)],
    ]
    for argv in steps:
        assert cli.main(argv) == 0, argv
    assert (s / "frames.csv").read_bytes() == (run_dir / "frames.csv").read_bytes()
    assert (s / "stints.json").read_bytes() == (run_dir / "stints.json").read_bytes()
    for name in ("model.json", "mds.json", "phase.json", "shots.json", "profile.svg", "mds.svg"):
        assert (s / name).read_bytes() == (run_dir / "stint_1" / name).read_bytes(), name


def test_synth_command_is_seeded(tmp_path):
    for name in ("a", "b"):
        assert cli.main(["synth", "--seed", "9", "--out-dir", str(tmp_path / name)]) == 0
    assert (tmp_path / "a" / "tracking.csv").read_bytes() == (tmp_path / "b" / "tracking.csv").read_bytes()


def test_config_file_run(game_dir, tmp_path):
    cfg = {
        "tracking": str(game_dir / "tracking.csv"), "events": str(game_dir / "events.csv"),
        "roster": str(game_dir / "roster.txt"), "out_dir": str(tmp_path / "o"), "min_minutes": 1,
        "k_max": 5, "restarts": 3,
    }
    path = tmp_path / "run.json"
    path.write_text(json.dumps(cfg))
    assert cli.main(["run-all", "--config", str(path)]) == 0
    path.write_text(json.dumps({**cfg, "colour": "red"}))
    assert cli.main(["run-all", "--config", str(path)]) == 2


def test_bad_seed_env(monkeypatch, tmp_path):
    monkeypatch.setenv("COURTPHASE_SEED", "abc")
    assert cli.main(["synth", "--out-dir", str(tmp_path)]) == 2


def test_run_config_validation(game_dir, tmp_path):
    base = dict(tracking=str(game_dir / "tracking.csv"), events=str(game_dir / "events.csv"),
                roster=str(game_dir / "roster.txt"), out_dir=str(tmp_path))
    for bad in ({"grid_ms": 0}, {"k_min": 5, "k_max": 3}, {"threshold": 1.5}, {"attack_dir": "up"}, {"staleness_ms": 10}):
        with pytest.raises(Exception) as exc:
            pipeline.RunConfig(**base, **bad).validate()
        assert getattr(exc.value, "exit_code", None) == 2


@pytest.mark.parametrize("sub", ["ingest", "stints", "cluster", "mds", "phase", "shots", "synth", "run-all", "plot"])
def test_help_per_subcommand(sub):
    out = subprocess.run([sys.executable, "-m", "courtphase.cli", sub, "--help"], capture_output=True, text=True)
    assert out.returncode == 0 and "usage: courtphase" in out.stdout
