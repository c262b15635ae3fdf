import math
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import sat_penetration
from scenesmith import _kernels

needs_numba = pytest.mark.skipif(not _kernels.HAVE_NUMBA, reason="numba not installed")


def _rows(raw):
    """(cx, cy, sx, sy, yaw, z0, z1) tuples to kernel rows."""
    return np.array([[cx, cy, sx / 2, sy / 2, math.cos(yaw), math.sin(yaw), z0, z1]
                     for cx, cy, sx, sy, yaw, z0, z1 in raw], dtype=np.float64).reshape(-1, _kernels.BOX_FIELDS)


def _random_boxes(rng, n):
    out = []
    for _ in range(n):
        z0 = rng.uniform(0, 1)
        out.append((rng.uniform(0, 4), rng.uniform(0, 4), rng.uniform(0.1, 1.5), rng.uniform(0.1, 1.5),
                    rng.uniform(-math.pi, math.pi), z0, z0 + rng.uniform(0.05, 1)))
    return out


box = st.tuples(
    st.floats(-3, 3), st.floats(-3, 3), st.floats(0.05, 2), st.floats(0.05, 2),
    st.floats(-math.pi, math.pi), st.just(-1e9), st.just(1e9),
)  # the z-range is huge so only the footprint limits the oracle's depth


@given(box, st.lists(box, min_size=1, max_size=8))
@settings(max_examples=200, deadline=None)
def test_penetration_agrees_with_reference(a, others):
    # the kernel reports push-out distance, the reference reports interval overlap;
    # they coincide unless one projection contains the other, and never disagree in sign
    depths = _kernels.penetration_depths(_rows([a])[0], _rows(others))
    for b, d in zip(others, depths):
        ref = sat_penetration(a, b)
        assert d >= ref - 1e-9
        assert (d > 1e-3) == (ref > 1e-3)


def test_depth_equals_overlap_without_containment():
    a, b = _rows([(0, 0, 2, 1, 0, -1, 1), (1.5, 0.2, 2, 1, 0, -1, 1)])
    assert _kernels.penetration_depths(a, b[None, :])[0] == pytest.approx(0.5)


def test_pairs_match_brute_force():
    rng = np.random.default_rng(5)
    raw = _random_boxes(rng, 40)
    expected = [(i, j) for i in range(40) for j in range(i + 1, 40)
                if sat_penetration(raw[i], raw[j]) > 1e-3
                and min(raw[i][6], raw[j][6]) - max(raw[i][5], raw[j][5]) > 1e-3]
    got = [tuple(p) for p in _kernels.overlap_pairs_numpy(_rows(raw), 1e-3)]
    assert got == expected


@needs_numba
def test_numba_and_numpy_agree():
    rng = np.random.default_rng(11)
    for n in (0, 1, 2, 17, 60):
        boxes = _rows(_random_boxes(rng, n))
        np.testing.assert_array_equal(_kernels.overlap_pairs_numba(boxes, 1e-3),
                                      _kernels.overlap_pairs_numpy(boxes, 1e-3))
        for a in _rows(_random_boxes(rng, 10)):
            assert _kernels.first_overlap_numba(a, boxes, 1e-3) == _kernels.first_overlap_numpy(a, boxes, 1e-3)


def test_touching_boxes_do_not_overlap():
    a, b = _rows([(0, 0, 1, 1, 0, 0, 1), (1, 0, 1, 1, 0, 0, 1)])
    assert _kernels.first_overlap(a, b[None, :], 1e-3) == -1
    c = _rows([(0.99, 0, 1, 1, 0, 0, 1)])
    assert _kernels.first_overlap(a, c, 1e-3) == 0


def test_stacked_boxes_do_not_overlap():
    a, b = _rows([(0, 0, 1, 1, 0, 0, 1), (0, 0, 1, 1, 0, 1, 2)])
    assert _kernels.first_overlap(a, b[None, :], 1e-3) == -1


def _scene_bytes(backend: str) -> bytes:
    code = ("import sys\n"
            "from scenesmith import _kernels\n"
            "from scenesmith.pipeline import RunConfig, SceneKey, generate_scene\n"
            "from scenesmith.scenefile import serialize_scene\n"
            "sys.stderr.write(_kernels.BACKEND)\n"
            "sys.stdout.buffer.write(serialize_scene(generate_scene(SceneKey('kitchen', 1, 0), RunConfig(seed=2))))\n")
    env = dict(os.environ, SCENESMITH_KERNELS=backend)
    proc = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, check=True)
    expected = "numpy" if backend == "numpy" or not _kernels.HAVE_NUMBA else "numba"
    assert proc.stderr.decode().strip().endswith(expected)
    return proc.stdout


@pytest.mark.slow
def test_backend_flag_gives_identical_scenes():
    assert _scene_bytes("numpy") == _scene_bytes("numba")
