import io

import numpy as np
import pytest
from sklearn.metrics import adjusted_rand_score

from courtphase import ingest, synth
from courtphase.errors import ConfigError


@pytest.fixture(scope="module")
def short_game():
    cfg = synth.default_config(period_ms=30_000)
    cfg["schedule"]["timeouts"] = [{"period": 2, "at_ms": 10_000, "duration_ms": 5_000}]
    cfg["schedule"]["free_throws"] = []
    return cfg, synth.generate_game(cfg, seed=5)


def test_seeded_output_is_reproducible(short_game):
    cfg, game = short_game
    again = synth.generate_game(cfg, seed=5)
    assert again.tracking_csv == game.tracking_csv and again.shots_csv == game.shots_csv
    assert synth.generate_game(cfg, seed=6).tracking_csv != game.tracking_csv


def test_timeline_layout(short_game):
    cfg, game = short_game
    tl = game.truth.timeline
    assert tl.active_ms == 4 * 30_000
    kinds = [e[0] for e in tl.events]
    assert kinds.count("PERIOD_START") == 4 and "HALF_BREAK" in kinds and kinds.count("QUARTER_BREAK") == 2
    assert ingest.exclusion_intervals(ingest.parse_events(io.StringIO(game.events_csv)))[0][0] == 0


def test_tracking_parses_cleanly(short_game):
    _, game = short_game
    res = ingest.parse_tracking(io.StringIO(game.tracking_csv))
    assert res.malformed == 0
    assert {s.player_id for s in res} == {"p1", "p2", "p3", "p4", "p5"}


def test_noise_free_positions_match_anchors():
    cfg = synth.default_config(noise_sd=0.0, period_ms=20_000)
    game = synth.generate_game(cfg, seed=1)
    samples = ingest.parse_tracking(io.StringIO(game.tracking_csv)).samples
    templates = synth.parse_templates(cfg)
    ts = np.array([s.timestamp_ms for s in samples])
    tmpl = game.truth.template_at(ts)
    blend = game.truth.in_blend(ts)
    _, period = game.truth.timeline.to_active(ts)
    names = cfg["lineup"]
    checked = 0
    for s, t, b, p in zip(samples, tmpl, blend, period):
        if t < 0 or b:
            continue
        ax, ay = templates[t].anchors[names.index(s.player_id)]
        sign = 1 if p < 3 else -1
        assert (s.x_cm, s.y_cm) == (round(ax * sign), round(ay))
        checked += 1
    assert checked > 1000


def test_defence_templates_never_shoot():
    cfg = synth.default_config()
    game = synth.generate_game(cfg, seed=2)
    phases = [synth.parse_templates(cfg)[i].phase.value for i in game.truth.shot_templates]
    assert "D" not in phases and len(phases) == len(game.truth.shots)


def test_config_validation():
    cfg = synth.default_config()
    cfg["templates"][0]["anchors"][0] = [2000, 0]
    with pytest.raises(ConfigError, match="off court"):
        synth.generate_game(cfg)
    cfg = synth.default_config()
    cfg["lineup"] = ["a", "a", "b", "c", "d"]
    with pytest.raises(ConfigError):
        synth.generate_game(cfg)


def test_ari_matches_sklearn():
    rng = np.random.default_rng(0)
    for _ in range(30):
        a = rng.integers(0, 6, 300)
        b = np.where(rng.random(300) < 0.7, a, rng.integers(0, 5, 300))
        assert synth.adjusted_rand_index(a, b) == pytest.approx(adjusted_rand_score(a, b), abs=1e-12)
    assert synth.adjusted_rand_index([0, 0, 1], [5, 5, 9]) == 1.0


def test_purity():
    assert synth.purity([0, 0, 1, 1, 2], [0, 0, 0, 1, 1]) == pytest.approx(0.6)


def test_template_equidistance_profile():
    ts = synth.parse_templates(synth.default_config())
    spreads = {t.name: t.mean_dyad() for t in ts}
    assert max(spreads, key=spreads.get) == "TR"
    assert min(spreads, key=spreads.get).startswith("D")
