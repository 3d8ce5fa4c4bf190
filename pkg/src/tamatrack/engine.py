"""Per-frame tracking loop: predict, score, assign, update, initialize, terminate."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from itertools import count

from . import appearance as app_mod
from .assoc import AppearanceModel, build_similarity, hungarian, validate_matches
from .core import (AppearanceDescriptor, BoundingBox, Detection, NonMonotoneFrame, Track,
                   TrackerConfig, validate_config)
from .cue import maybe_add, prune_cue
from .geometry import kalman_predict, kalman_update
from .lifecycle import apply_termination, extend_trees, promote_trees


@dataclass(frozen=True, order=True)
class ResultRow:
    frame: int
    id: int
    left: float
    top: float
    width: float
    height: float

    @classmethod
    def of(cls, frame: int, track_id: int, box: BoundingBox) -> "ResultRow":
        return cls(frame, track_id, *box.as_tuple())

    @property
    def box(self) -> BoundingBox:
        return BoundingBox(self.left, self.top, self.width, self.height)


@dataclass
class FrameEvents:
    frame: int
    matches: list = field(default_factory=list)  # (track_id, detection index in frame)
    births: list = field(default_factory=list)  # new track ids
    terminations: list = field(default_factory=list)
    rows: list = field(default_factory=list)


class Engine:
    """Owns every track and hypothesis tree of one sequence."""

    def __init__(self, cfg: TrackerConfig, model: AppearanceModel | None = None):
        self.cfg = validate_config(cfg)
        self.model = model or AppearanceModel()
        if cfg.likelihood_mode == "deep_tama" and (self.model.provider is None or self.model.weights is None):
            raise ValueError("deep_tama mode needs a pair-feature provider and LSTM weights")
        if cfg.likelihood_mode in ("ctama", "baseline_linear", "baseline_select") and self.model.scorer is None:
            raise ValueError(f"{cfg.likelihood_mode} mode needs a pair scorer")
        self.tracks: list[Track] = []
        self.trees = []
        self.current_frame = 0
        self.results: list[ResultRow] = []
        self._ids = count(1)
        self._order = count()

    @property
    def lambda_f(self) -> float:
        if self.cfg.lambda_f is not None:
            return self.cfg.lambda_f
        return getattr(self.model.scorer, "default_lambda_f", 2.0)

    def _prepare(self, dets):
        out = []
        for det in dets:
            desc = self.model.prepare(det.descriptor)
            out.append(replace(det, descriptor=desc) if desc is not det.descriptor else det)
        return out

    def _update_model(self, prev: AppearanceDescriptor | None, obs: AppearanceDescriptor, p: float):
        mode = self.cfg.likelihood_mode
        if prev is None or obs is None:
            return obs
        if mode == "baseline_linear":
            if prev.vector is None or obs.vector is None:
                return prev
            vec = app_mod.linear_feature_update(prev.vector, obs.vector, p, self.lambda_f)
            return AppearanceDescriptor(vector=vec, tag=prev.tag)
        if mode == "baseline_select":
            return app_mod.select_feature_update(prev, obs, p, self.cfg.tau_a)
        return obs

    def step(self, frame: int, frame_dets) -> FrameEvents:
        cfg = self.cfg
        if frame <= self.current_frame:
            raise NonMonotoneFrame(f"frame {frame} does not follow {self.current_frame}")
        if any(d.frame != frame for d in frame_dets):
            raise NonMonotoneFrame(f"detections passed to frame {frame} carry other frame stamps")
        self.current_frame = frame
        dets = self._prepare(list(frame_dets))
        events = FrameEvents(frame)

        tracks = [kalman_predict(t, cfg) for t in self.tracks]
        for t in tracks:
            t.cue = prune_cue(t.cue, frame, cfg)

        sim = build_similarity(tracks, dets, cfg, self.model)
        assign = hungarian(-sim.values) if tracks and dets else []
        valid, missed = validate_matches(assign, sim, cfg.tau_match)

        for i, j in valid:
            det = dets[j]
            lik = float(min(1.0, max(0.0, sim.values[i, j])))
            trk = kalman_update(tracks[i], det, cfg)
            trk.model_appearance = self._update_model(trk.model_appearance, det.descriptor, lik)
            trk.recent_appearance = det.descriptor
            trk.recent_confidence = lik
            trk.recent_box = det.box
            trk.cue = maybe_add(trk.cue, lik, det.descriptor, frame, cfg, det.box)
            trk.miss_count = 0
            trk.last_matched_frame = frame
            tracks[i] = trk
            events.matches.append((trk.id, det.index))
            events.rows.append(ResultRow.of(frame, trk.id, trk.box))
        for i in missed:
            tracks[i].miss_count += 1

        kept = []
        for trk in apply_termination(tracks, cfg):
            if trk.status == "terminated":
                events.terminations.append(trk.id)
            else:
                kept.append(trk)

        matched_dets = {j for _, j in valid}
        unmatched = [d for j, d in enumerate(dets) if j not in matched_dets]
        trees, _ = extend_trees(self.trees, unmatched, cfg, self._order)
        born, supports, self.trees = promote_trees(trees, cfg, self._ids)
        for trk, chain in zip(born, supports):
            events.births.append(trk.id)
            events.rows.extend(ResultRow.of(d.frame, trk.id, d.box) for d in chain)
        self.tracks = kept + born
        self.results.extend(events.rows)
        return events

    def sorted_results(self) -> list[ResultRow]:
        return sorted(self.results, key=lambda r: (r.frame, r.id))


def run_sequence(dets_by_frame: dict, cfg: TrackerConfig, model: AppearanceModel | None = None,
                 frames=None) -> list[ResultRow]:
    """Track a whole sequence; ``frames`` lists every frame stamp to step through
    (defaults to the frames that carry detections)."""
    engine = Engine(cfg, model)
    stamps = sorted(frames) if frames is not None else sorted(dets_by_frame)
    for frame in stamps:
        engine.step(frame, dets_by_frame.get(frame, []))
    return engine.sorted_results()

