"""Builders shared by the test modules."""

import numpy as np

from tamatrack.core import AppearanceDescriptor, BoundingBox, Detection, Track, TrackerConfig
from tamatrack.geometry import initial_covariance

# criterion number -> "PASS/FAIL ..." line, printed at the end of the run
ACCEPTANCE_LINES = {}


def make_track(cx=100.0, cy=100.0, vx=0.0, vy=0.0, w=40.0, h=100.0, tid=1, desc=None,
               conf=0.5, cfg=None):
    cfg = cfg or TrackerConfig()
    box = BoundingBox.from_center(cx, cy, w, h)
    return Track(id=tid, state=np.array([cx, cy, vx, vy], dtype=float), cov=initial_covariance(cfg),
                 shape=(w, h), recent_appearance=desc, recent_confidence=conf, recent_box=box,
                 model_appearance=desc)


def make_det(cx, cy, w=40.0, h=100.0, frame=1, conf=0.9, tag=None, vector=None, index=0):
    desc = None
    if tag is not None or vector is not None:
        desc = AppearanceDescriptor(vector=vector, tag=tag)
    return Detection(frame, BoundingBox.from_center(cx, cy, w, h), conf, desc, index=index)
