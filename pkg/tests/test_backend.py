import json
import os
import subprocess
import sys

import numpy as np
import pytest

from courtphase import _backend, _kernels_py, cluster

compiled = pytest.importorskip("courtphase._kernels")


@pytest.fixture
def data():
    rng = np.random.default_rng(11)
    pos = rng.uniform(-1500, 1500, size=(500, 5, 2))
    pts = np.ascontiguousarray(_kernels_py.dyad_distances(pos))
    cents = np.ascontiguousarray(pts[rng.choice(500, 6, replace=False)])
    return pos, pts, cents


def test_dyad_distances_identical(data):
    pos, _, _ = data
    assert np.array_equal(compiled.dyad_distances(pos), _kernels_py.dyad_distances(pos))


def test_assign_and_sums_identical(data):
    _, pts, cents = data
    la, da = compiled.assign_labels(pts, cents)
    lb, db = _kernels_py.assign_labels(pts, cents)
    assert np.array_equal(la, lb) and np.array_equal(da, db)
    sa, ca = compiled.centroid_sums(pts, la, 6)
    sb, cb = _kernels_py.centroid_sums(pts, lb, 6)
    assert np.array_equal(sa, sb) and np.array_equal(ca, cb)


def test_hartigan_pass_identical(data):
    _, pts, cents = data
    labels, _ = _kernels_py.assign_labels(pts, cents)
    sums, counts = _kernels_py.centroid_sums(pts, labels, 6)
    c0 = np.ascontiguousarray(sums / counts[:, None])
    runs = []
    for impl in (compiled, _kernels_py):
        c, n, lab = c0.copy(), counts.copy(), labels.copy()
        moved = impl.hartigan_pass(pts, c, n, lab)
        runs.append((moved, c, n, lab))
    assert runs[0][0] == runs[1][0]
    for a, b in zip(runs[0][1:], runs[1][1:]):
        assert np.array_equal(a, b)


def test_kmeans_identical_across_backends(data, monkeypatch):
    _, pts, _ = data
    monkeypatch.setattr(_backend, "_impl", compiled)
    a = cluster.kmeans(pts, 6, seed=4, restarts=4)
    monkeypatch.setattr(_backend, "_impl", _kernels_py)
    b = cluster.kmeans(pts, 6, seed=4, restarts=4)
    assert a.wcss == b.wcss
    assert np.array_equal(a.assignments, b.assignments)


def test_env_forces_fallback():
    env = dict(os.environ, COURTPHASE_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", "import json, courtphase; print(json.dumps(courtphase.BACKEND))"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert json.loads(out.stdout) == "python"
