import numpy as np
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from courtphase import _backend, cluster, ingest, mds, phase, segment, shots, synth
from courtphase.ingest import EventKind, GameEvent, RawSample

SETTINGS = settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])

coords = st.integers(-1500, 1500)
samples_st = st.lists(
    st.builds(RawSample, st.integers(0, 3000), st.sampled_from(["a", "b", "c"]), coords, coords),
    min_size=1, max_size=40,
)


def _events(spans):
    evs = [GameEvent(EventKind.PRE_MATCH, -100, 0), GameEvent(EventKind.PERIOD_START, 0, None, 1),
           GameEvent(EventKind.POST_MATCH, 10_000, 10_100)]
    evs += [GameEvent(EventKind.TIMEOUT, s, s + d) for s, d in spans]
    return evs


spans_st = st.lists(st.tuples(st.integers(0, 3000), st.integers(1, 400)), max_size=4)


@SETTINGS
@given(samples_st, spans_st)
def test_filter_is_idempotent_and_drops_only_excluded(samples, spans):
    evs = _events(spans)
    once = ingest.filter_active(samples, evs)
    assert ingest.filter_active(once, evs) == once
    for s in samples:
        inside = any(a <= s.timestamp_ms < a + d for a, d in spans)
        assert (s in once) or inside


@SETTINGS
@given(samples_st, st.sampled_from([10, 50, 100]), st.integers(1, 8))
def test_resample_matches_bruteforce_lookup(samples, grid, stale_mult):
    staleness = grid * stale_mult
    fs = ingest.resample_frames(samples, grid, staleness)
    for i, t in enumerate(fs.times):
        assert t % grid == 0
        for j, p in enumerate(fs.player_ids):
            mine = [(s.timestamp_ms, k) for k, s in enumerate(samples) if s.player_id == p and s.timestamp_ms <= t]
            if not mine or t - max(mine)[0] > staleness:
                assert np.isnan(fs.positions[i, j, 0])
                continue
            src = samples[max(mine)[1]]
            assert tuple(fs.positions[i, j]) == (src.x_cm, src.y_cm)
            assert t - src.timestamp_ms <= staleness


@SETTINGS
@given(st.lists(st.tuples(coords, coords), min_size=1, max_size=20))
def test_resample_identity_on_grid(xy):
    samples = [RawSample(50 * i, "a", x, y) for i, (x, y) in enumerate(xy)]
    fs = ingest.resample_frames(samples, 50, 500)
    assert fs.times.tolist() == [s.timestamp_ms for s in samples]
    assert fs.positions[:, 0].tolist() == [[float(x), float(y)] for x, y in xy]


presence = arrays(bool, st.tuples(st.integers(1, 60), st.just(7)))


@SETTINGS
@given(presence, st.integers(1, 20))
def test_stint_partition(mask, min_frames):
    n, p = mask.shape
    ids = tuple(f"p{j}" for j in range(p))
    pos = np.where(mask[:, :, None], 1.0, np.nan) * np.ones((n, p, 2))
    fs = ingest.FrameSeries(50, np.arange(n) * 50, ids, pos, np.ones(n, bool), np.ones(n, np.int64))
    det = segment.extract_stints_detailed(fs, ids[:6], min_frames * 50)
    in_stints = sum(s.n_frames for s in det.stints)
    five = sum(k is not None for k in det.lineup_of_frame)
    assert in_stints + det.short_stint_frames == five
    assert five + det.underfull_frames + det.overfull_frames == n
    assert all(s.n_frames * 50 >= min_frames * 50 for s in det.stints)
    frames = np.concatenate([s.frame_ms for s in det.stints]) if det.stints else np.zeros(0)
    assert frames.size == np.unique(frames).size


@SETTINGS
@given(arrays(np.float64, (4, 5, 2), elements=st.floats(-1500, 1500)), st.floats(0, 2 * np.pi), coords, coords)
def test_dyad_distances_rigid_invariance(pos, theta, dx, dy):
    rot = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    moved = pos @ rot.T + np.array([dx, dy])
    a, b = _backend.dyad_distances(pos), _backend.dyad_distances(moved)
    assert a.shape == (4, 10)
    np.testing.assert_allclose(a, b, atol=1e-6)


points_st = arrays(np.float64, st.tuples(st.integers(6, 30), st.integers(1, 4)), elements=st.integers(-50, 50).map(float))


@SETTINGS
@given(points_st, st.integers(0, 2**16))
def test_kmeans_bookkeeping(pts, seed):
    distinct = cluster.n_distinct(pts)
    assume(distinct >= 2)
    ks = range(1, min(distinct, 4) + 1)
    models = [cluster.kmeans(pts, k, seed=seed, restarts=4) for k in ks]
    tss = cluster.total_ss(pts)
    for m in models:
        assert abs(cluster.between_ss(pts, m.assignments, m.k) + m.wcss - tss) <= 1e-7 * max(tss, 1)
        if tss > 0:
            assert abs(m.bd_td - cluster.between_ss(pts, m.assignments, m.k) / tss) < 1e-9
        assert 0 <= m.bd_td <= 1
        assert set(np.unique(m.assignments)) == set(range(m.k))
    # more clusters never fit worse, up to the restart budget
    wcss = [m.wcss for m in models]
    assert all(b <= a + 1e-7 * max(tss, 1) for a, b in zip(wcss, wcss[1:]))
    again = cluster.kmeans(pts, ks[-1], seed=seed, restarts=4)
    assert np.array_equal(again.assignments, models[-1].assignments) and again.wcss == models[-1].wcss


dist_st = arrays(np.float64, (5, 2), elements=st.floats(-1000, 1000)).map(
    lambda p: np.sqrt(((p[:, None] - p[None]) ** 2).sum(-1))
)


@SETTINGS
@given(dist_st)
def test_mds_centered_and_ordered(d):
    d = 0.5 * (d + d.T)
    np.fill_diagonal(d, 0.0)
    emb = mds.classical_mds(d)
    np.testing.assert_allclose(emb.coords.mean(axis=0), 0.0, atol=1e-6 * max(d.max(), 1))
    assert np.all(np.diff(emb.eigenvalues) <= 1e-9 * max(d.max() ** 2, 1))
    assert 0.0 <= emb.strain_share <= 1.0 + 1e-12
    rec = np.sqrt(((emb.coords[:, None] - emb.coords[None]) ** 2).sum(-1))
    np.testing.assert_allclose(rec, d, atol=1e-6 * max(d.max(), 1))


@SETTINGS
@given(st.lists(st.tuples(st.floats(-1500, 1500), st.integers(1, 4)), min_size=1, max_size=30), st.floats(0, 800))
def test_direction_flip_swaps_offense_and_defense(rows, band):
    mx, per = zip(*rows)
    a = phase.label_frames(mx, per, band, phase.AttackDirection(1))
    b = phase.label_frames(mx, per, band, phase.AttackDirection(1).flipped())
    swap = np.array([0, 2, 1])
    assert np.array_equal(swap[a], b)


@SETTINGS
@given(st.lists(st.integers(0, 4), min_size=2, max_size=80), st.data())
def test_transition_columns(labels, data):
    contiguous = data.draw(st.lists(st.booleans(), min_size=len(labels), max_size=len(labels)))
    tm = phase.transition_matrix(labels, contiguous, k=5)
    assert np.all(np.diag(tm.counts) == 0)
    sums = tm.percent.sum(axis=0)
    for j in range(5):
        assert abs(sums[j] - (100.0 if tm.counts[:, j].sum() else 0.0)) < 1e-9
    expected = sum(a != b and c for a, b, c in zip(labels, labels[1:], contiguous[1:]))
    assert tm.switch_count == expected


@SETTINGS
@given(st.lists(st.tuples(st.integers(0, 2000), st.booleans()), max_size=30), st.integers(0, 100))
def test_shot_conservation(events, tol):
    frame_ms = np.arange(0, 2000, 200)
    labels = np.arange(frame_ms.size) % 3
    evs = [shots.ShotEvent(t, m) for t, m in events]
    clusters = shots.attach_shots(evs, frame_ms, labels, tol)
    rep = shots.shot_report(clusters, [m for _, m in events])
    assert rep.total_shots == len(events)
    assert sum(a for a, _ in rep.per_cluster.values()) == rep.attempts
    assert sum(m for _, m in rep.per_cluster.values()) == rep.made
    assert all(m <= a for a, m in rep.per_cluster.values())


@SETTINGS
@given(st.lists(st.integers(0, 5), min_size=2, max_size=60), st.permutations(range(6)))
def test_ari_label_permutation_invariant(labels, perm):
    relabeled = [perm[x] for x in labels]
    assert abs(synth.adjusted_rand_index(labels, relabeled) - 1.0) < 1e-12
