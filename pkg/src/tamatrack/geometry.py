"""Constant-velocity Kalman filtering of box centers and the motion/shape likelihoods."""

from __future__ import annotations

import math

import numpy as np

from ._backend import kernels
from .core import BoundingBox, Detection, Track, TrackerConfig

F = np.array([[1.0, 0.0, 1.0, 0.0],
              [0.0, 1.0, 0.0, 1.0],
              [0.0, 0.0, 1.0, 0.0],
              [0.0, 0.0, 0.0, 1.0]])
H = np.array([[1.0, 0.0, 0.0, 0.0],
              [0.0, 1.0, 0.0, 0.0]])


def iou(a: BoundingBox, b: BoundingBox) -> float:
    iw = min(a.left + a.width, b.left + b.width) - max(a.left, b.left)
    ih = min(a.top + a.height, b.top + b.height) - max(a.top, b.top)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    return min(1.0, inter / (a.width * a.height + b.width * b.height - inter))


def iou_matrix(boxes_a, boxes_b) -> np.ndarray:
    """Pairwise IoU for two sequences of boxes (or Nx4 ltwh arrays)."""
    a = _as_array(boxes_a)
    b = _as_array(boxes_b)
    return kernels.iou_matrix(a, b)


def _as_array(boxes) -> np.ndarray:
    if isinstance(boxes, np.ndarray):
        return np.ascontiguousarray(boxes, dtype=np.float64).reshape(-1, 4)
    return np.array([b.as_tuple() for b in boxes], dtype=np.float64).reshape(-1, 4)


def _symmetrize(p: np.ndarray) -> np.ndarray:
    return (p + p.T) / 2.0


def process_noise(cfg: TrackerConfig) -> np.ndarray:
    return np.diag([cfg.q_pos, cfg.q_pos, cfg.q_vel, cfg.q_vel])


def initial_covariance(cfg: TrackerConfig) -> np.ndarray:
    return np.diag([cfg.p0_pos, cfg.p0_pos, cfg.p0_vel, cfg.p0_vel])


def kalman_predict(track: Track, cfg: TrackerConfig) -> Track:
    out = track.copy()
    out.state = F @ track.state
    out.cov = _symmetrize(F @ track.cov @ F.T + process_noise(cfg))
    return out


def kalman_update(track: Track, det: Detection, cfg: TrackerConfig) -> Track:
    out = track.copy()
    z = np.array(det.box.center)
    r = cfg.r_meas * np.eye(2)
    s = H @ track.cov @ H.T + r
    gain = track.cov @ H.T @ np.linalg.inv(s)
    out.state = track.state + gain @ (z - H @ track.state)
    # Joseph form keeps the covariance PSD under rounding.
    i_kh = np.eye(4) - gain @ H
    out.cov = _symmetrize(i_kh @ track.cov @ i_kh.T + gain @ r @ gain.T)
    g = cfg.gamma_shape
    w, h = track.shape
    out.shape = (g * det.box.width + (1 - g) * w, g * det.box.height + (1 - g) * h)
    return out


def predicted_center(track: Track) -> tuple[float, float]:
    return float(track.state[0]), float(track.state[1])


def motion_likelihood(track: Track, det: Detection, cfg: TrackerConfig) -> float:
    cx, cy = predicted_center(track)
    d = np.array([det.box.center_x - cx, det.box.center_y - cy])
    return math.exp(-cfg.eta * float(d @ cfg.sigma @ d))


def shape_likelihood(a: BoundingBox, b: BoundingBox, cfg: TrackerConfig) -> float:
    dh = abs(a.height - b.height) / (a.height + b.height)
    dw = abs(a.width - b.width) / (a.width + b.width)
    return math.exp(-cfg.xi * (dh + dw))


def geometric_likelihood(track: Track, det: Detection, cfg: TrackerConfig) -> tuple[float, float]:
    """(motion, shape) factors for a track already predicted to ``det.frame``."""
    return motion_likelihood(track, det, cfg), shape_likelihood(track.box, det.box, cfg)


def init_state(boxes: list[BoundingBox], cfg: TrackerConfig):
    """State and covariance for a track born from a chain of boxes.

    Position is the last box center; velocity spans first to last box,
    measured in tracker steps (one predict per processed frame).
    """
    first, last = boxes[0], boxes[-1]
    span = len(boxes) - 1
    if span > 0:
        vx = (last.center_x - first.center_x) / span
        vy = (last.center_y - first.center_y) / span
    else:
        vx = vy = 0.0
    state = np.array([last.center_x, last.center_y, vx, vy])
    return state, initial_covariance(cfg)
