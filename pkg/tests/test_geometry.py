import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tamatrack.core import BoundingBox, TrackerConfig
from tamatrack.geometry import (iou, iou_matrix, kalman_predict, kalman_update, motion_likelihood,
                                shape_likelihood)

from .helpers import make_det, make_track

boxes = st.builds(BoundingBox, st.floats(-100, 100), st.floats(-100, 100), st.floats(1, 80), st.floats(1, 80))


def test_iou_examples():
    a = BoundingBox(0, 0, 10, 10)
    assert iou(a, a) == 1.0
    assert iou(a, BoundingBox(20, 20, 5, 5)) == 0.0
    assert iou(a, BoundingBox(5, 0, 10, 10)) == pytest.approx(50 / 150, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(boxes, boxes)
def test_iou_symmetric_and_bounded(a, b):
    v = iou(a, b)
    assert 0.0 <= v <= 1.0
    assert v == pytest.approx(iou(b, a), abs=1e-15)


def test_iou_matrix_matches_scalar(kern):
    rng = np.random.default_rng(3)
    a = np.column_stack([rng.uniform(0, 50, (6, 2)), rng.uniform(5, 30, (6, 2))])
    b = np.column_stack([rng.uniform(0, 50, (4, 2)), rng.uniform(5, 30, (4, 2))])
    m = kern.iou_matrix(np.ascontiguousarray(a), np.ascontiguousarray(b))
    for i in range(6):
        for j in range(4):
            assert m[i, j] == pytest.approx(iou(BoundingBox(*a[i]), BoundingBox(*b[j])), abs=1e-12)
    assert iou_matrix([], [BoundingBox(0, 0, 1, 1)]).shape == (0, 1)


def test_predict_constant_velocity(cfg):
    trk = make_track(10, 10, 2, -1)
    out = kalman_predict(trk, cfg)
    assert np.array_equal(out.state, [12, 9, 2, -1])
    assert trk.state[0] == 10  # input untouched
    still = kalman_predict(make_track(5, 6), cfg)
    assert tuple(still.state[:2]) == (5, 6)


def test_predict_trace_change_on_random_spd(cfg):
    # trace(F P F' + Q) - trace(P) = 2 (P02 + P13) + P22 + P33 + trace(Q); it is strictly
    # positive whenever position and velocity are not strongly anti-correlated.
    rng = np.random.default_rng(0)
    q_trace = 2 * cfg.q_pos + 2 * cfg.q_vel
    for _ in range(50):
        a = rng.normal(size=(4, 4))
        trk = make_track()
        trk.cov = a @ a.T + 0.1 * np.eye(4)
        p = trk.cov
        change = np.trace(kalman_predict(trk, cfg).cov) - np.trace(p)
        assert change == pytest.approx(2 * (p[0, 2] + p[1, 3]) + p[2, 2] + p[3, 3] + q_trace, abs=1e-9)
        trk.cov = np.diag(rng.uniform(0.1, 10, 4))
        assert np.trace(kalman_predict(trk, cfg).cov) > np.trace(trk.cov)


def test_update_zero_innovation(cfg):
    trk = make_track(100, 100)
    out = kalman_update(trk, make_det(100, 100), cfg)
    assert np.allclose(out.state[:2], [100, 100])
    assert np.trace(out.cov) < np.trace(trk.cov)


def test_update_never_inflates_position_variance(cfg):
    rng = np.random.default_rng(1)
    for _ in range(50):
        a = rng.normal(size=(4, 4))
        trk = make_track()
        trk.cov = a @ a.T + 0.1 * np.eye(4)
        out = kalman_update(trk, make_det(*rng.uniform(50, 150, 2)), cfg)
        assert np.all(np.diag(out.cov)[:2] <= np.diag(trk.cov)[:2] + 1e-12)
        assert np.allclose(out.cov, out.cov.T)


def test_update_shape_smoothing():
    cfg = TrackerConfig(gamma_shape=1.0)
    out = kalman_update(make_track(w=40, h=100), make_det(100, 100, w=30, h=90), cfg)
    assert out.shape == (30, 90)


def test_motion_likelihood(cfg):
    trk = make_track(100, 100)
    assert motion_likelihood(trk, make_det(100, 100), cfg) == 1.0
    assert motion_likelihood(trk, make_det(170, 100), cfg) == pytest.approx(math.exp(-0.5), abs=1e-12)
    assert round(math.exp(-0.5), 4) == 0.6065


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 2 * math.pi), st.floats(0.5, 200), st.floats(0.5, 200))
def test_motion_monotone_along_ray(theta, r1, r2):
    cfg = TrackerConfig()
    trk = make_track(0, 0)
    near, far = sorted([r1, r2])
    p_near = motion_likelihood(trk, make_det(near * math.cos(theta), near * math.sin(theta)), cfg)
    p_far = motion_likelihood(trk, make_det(far * math.cos(theta), far * math.sin(theta)), cfg)
    assert p_far <= p_near


def test_shape_likelihood(cfg):
    a = BoundingBox(0, 0, 50, 100)
    b = BoundingBox(3, 3, 40, 80)
    assert shape_likelihood(a, a, cfg) == 1.0
    expected = math.exp(-4 * (20 / 180 + 10 / 90))
    assert shape_likelihood(a, b, cfg) == pytest.approx(expected, abs=1e-12)
    assert round(expected, 4) == 0.4111
    assert shape_likelihood(b, a, cfg) == shape_likelihood(a, b, cfg)
