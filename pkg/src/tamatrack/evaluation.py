"""Evaluation helpers: CLEAR-MOT and identity metrics, NMS, frame decimation,
and a seeded synthetic scene generator with ground truth."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import asdict, dataclass, field

import numpy as np

from .assoc import hungarian
from .core import AppearanceDescriptor, BoundingBox, Detection, InvalidValue, TrackingError
from .geometry import iou, iou_matrix


class NonIntegerStride(TrackingError, ValueError):
    pass


@dataclass(frozen=True)
class GtRow:
    frame: int
    id: int
    left: float
    top: float
    width: float
    height: float
    consider: bool = True  # False for fully occluded targets; ignored by the metrics

    @property
    def box(self) -> BoundingBox:
        return BoundingBox(self.left, self.top, self.width, self.height)


def _by_frame(rows):
    out = defaultdict(list)
    for r in rows:
        out[r.frame].append(r)
    return out


def _row_boxes(rows) -> np.ndarray:
    return np.array([[r.left, r.top, r.width, r.height] for r in rows], dtype=np.float64).reshape(-1, 4)


@dataclass
class MotMetrics:
    num_gt: int = 0
    matches: int = 0
    fp: int = 0
    fn: int = 0
    idsw: int = 0
    fragmentations: int = 0
    mota: float = 1.0
    motp: float = 1.0
    mt: int = 0
    ml: int = 0
    num_ids: int = 0
    per_frame: list = field(default_factory=list, repr=False)

    def summary(self) -> dict:
        out = asdict(self)
        out.pop("per_frame")
        return out


def _match_frame(gts, res, prev: dict, thr: float):
    """Correspondences for one frame: keep last frame's pairs that still overlap,
    then maximize IoU over what is left."""
    if not gts or not res:
        return {}, np.zeros((len(gts), len(res)))
    ious = iou_matrix(_row_boxes(gts), _row_boxes(res))
    gt_idx = {g.id: k for k, g in enumerate(gts)}
    res_idx = {r.id: k for k, r in enumerate(res)}
    pairs = {}
    used_res = set()
    for gid, rid in prev.items():
        if gid in gt_idx and rid in res_idx and rid not in used_res:
            if ious[gt_idx[gid], res_idx[rid]] >= thr:
                pairs[gid] = rid
                used_res.add(rid)
    free_g = [k for k, g in enumerate(gts) if g.id not in pairs]
    free_r = [k for k, r in enumerate(res) if r.id not in used_res]
    if free_g and free_r:
        sub = ious[np.ix_(free_g, free_r)]
        cost = np.where(sub >= thr, 1.0 - sub, 10.0)
        for a, b in hungarian(cost):
            if sub[a, b] >= thr:
                pairs[gts[free_g[a]].id] = res[free_r[b]].id
    return pairs, ious


def clear_mot(gt_rows, result_rows, iou_threshold: float = 0.5) -> MotMetrics:
    gt_rows = [g for g in gt_rows if getattr(g, "consider", True)]
    gt_frames = _by_frame(gt_rows)
    res_frames = _by_frame(result_rows)
    m = MotMetrics(num_gt=len(gt_rows))
    prev: dict = {}
    last_match: dict = {}
    tracked_frames = defaultdict(int)
    total_frames = defaultdict(int)
    was_tracked: dict = {}
    iou_sum = 0.0
    for frame in sorted(set(gt_frames) | set(res_frames)):
        gts, res = gt_frames.get(frame, []), res_frames.get(frame, [])
        pairs, ious = _match_frame(gts, res, prev, iou_threshold)
        gt_idx = {g.id: k for k, g in enumerate(gts)}
        res_idx = {r.id: k for k, r in enumerate(res)}
        switches = 0
        for gid, rid in pairs.items():
            if gid in last_match and last_match[gid] != rid:
                switches += 1
            last_match[gid] = rid
            iou_sum += ious[gt_idx[gid], res_idx[rid]]
        for g in gts:
            total_frames[g.id] += 1
            tracked = g.id in pairs
            if tracked:
                tracked_frames[g.id] += 1
                if was_tracked.get(g.id) is False:
                    m.fragmentations += 1
            if tracked or g.id in was_tracked:
                was_tracked[g.id] = tracked
        m.matches += len(pairs)
        m.idsw += switches
        m.fp += len(res) - len(pairs)
        m.fn += len(gts) - len(pairs)
        m.per_frame.append((frame, len(pairs), len(res) - len(pairs), len(gts) - len(pairs), switches))
        prev = pairs
    m.mota = 1.0 - (m.fp + m.fn + m.idsw) / m.num_gt if m.num_gt else (1.0 if m.fp == 0 else -math.inf)
    m.motp = iou_sum / m.matches if m.matches else 0.0
    m.num_ids = len(total_frames)
    for gid, n in total_frames.items():
        ratio = tracked_frames[gid] / n
        if ratio >= 0.8:
            m.mt += 1
        elif ratio <= 0.2:
            m.ml += 1
    return m


@dataclass
class IdentityMetrics:
    idtp: int
    idfp: int
    idfn: int

    @property
    def idf1(self) -> float:
        den = 2 * self.idtp + self.idfp + self.idfn
        return 2 * self.idtp / den if den else 0.0

    @property
    def idp(self) -> float:
        den = self.idtp + self.idfp
        return self.idtp / den if den else 0.0

    @property
    def idr(self) -> float:
        den = self.idtp + self.idfn
        return self.idtp / den if den else 0.0


def identity_metrics(gt_rows, result_rows, iou_threshold: float = 0.5) -> IdentityMetrics:
    gt_rows = [g for g in gt_rows if getattr(g, "consider", True)]
    gt_ids = sorted({g.id for g in gt_rows})
    res_ids = sorted({r.id for r in result_rows})
    if not gt_rows or not result_rows:
        return IdentityMetrics(0, len(result_rows), len(gt_rows))
    gi = {g: k for k, g in enumerate(gt_ids)}
    ri = {r: k for k, r in enumerate(res_ids)}
    overlap = np.zeros((len(gt_ids), len(res_ids)), dtype=np.int64)
    res_frames = _by_frame(result_rows)
    for frame, gts in _by_frame(gt_rows).items():
        res = res_frames.get(frame, [])
        if not res:
            continue
        ious = iou_matrix(_row_boxes(gts), _row_boxes(res))
        for a, g in enumerate(gts):
            for b, r in enumerate(res):
                if ious[a, b] >= iou_threshold:
                    overlap[gi[g.id], ri[r.id]] += 1
    idtp = int(sum(overlap[a, b] for a, b in hungarian(-overlap.astype(np.float64))))
    return IdentityMetrics(idtp, len(result_rows) - idtp, len(gt_rows) - idtp)


def idf1(gt_rows, result_rows, iou_threshold: float = 0.5) -> float:
    return identity_metrics(gt_rows, result_rows, iou_threshold).idf1


def nms(dets, iou_thresh: float, conf_min: float = -math.inf) -> list:
    """Greedy suppression by raw confidence; survivors keep their input order."""
    cands = [(k, d) for k, d in enumerate(dets) if d.raw_confidence >= conf_min]
    cands.sort(key=lambda kd: (-kd[1].raw_confidence, kd[0]))
    kept = []
    for k, det in cands:
        if all(iou(det.box, other.box) <= iou_thresh for _, other in kept):
            kept.append((k, det))
    return [d for _, d in sorted(kept, key=lambda kd: kd[0])]


def decimation_stride(fps_orig: int, fps_new: int) -> int:
    if fps_new <= 0 or fps_orig <= 0 or fps_orig % fps_new:
        raise NonIntegerStride(f"{fps_orig} fps cannot be reduced to {fps_new} fps by an integer stride")
    return fps_orig // fps_new


def decimate(frames, fps_orig: int, fps_new: int) -> list:
    """Keep items whose frame stamp t satisfies (t - 1) % (fps_orig / fps_new) == 0.

    Items may be ints or anything with a ``frame`` attribute.
    """
    stride = decimation_stride(fps_orig, fps_new)
    return [f for f in frames if (getattr(f, "frame", f) - 1) % stride == 0]


# ---------------------------------------------------------------- synthetic scenes

@dataclass
class TargetSpec:
    id: int
    waypoints: list  # [(frame, cx, cy), ...] in increasing frame order
    size: tuple = (40.0, 100.0)
    occluded: list = field(default_factory=list)  # [(first, last), ...] inclusive


@dataclass
class ScenarioSpec:
    targets: list
    n_frames: int
    arena: tuple = (640.0, 480.0)
    pos_noise: float = 0.0
    size_noise: float = 0.0
    dropout: float = 0.0
    clutter_rate: float = 0.0  # expected false detections per true detection
    descriptor_noise: float = 0.0
    seed: int = 0

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioSpec":
        data = dict(data)
        data["targets"] = [
            TargetSpec(t["id"], [tuple(w) for w in t["waypoints"]], tuple(t.get("size", (40.0, 100.0))),
                       [tuple(o) for o in t.get("occluded", [])])
            for t in data["targets"]
        ]
        if "arena" in data:
            data["arena"] = tuple(data["arena"])
        return cls(**data)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class Scenario:
    detections: dict  # frame -> list[Detection]
    gt: list  # GtRow
    signatures: dict  # target id -> 48-d unit vector
    frames: list


def _position(waypoints, frame):
    if frame < waypoints[0][0] or frame > waypoints[-1][0]:
        return None
    for (f0, x0, y0), (f1, x1, y1) in zip(waypoints, waypoints[1:]):
        if f0 <= frame <= f1:
            a = (frame - f0) / (f1 - f0) if f1 > f0 else 0.0
            return x0 + a * (x1 - x0), y0 + a * (y1 - y0)
    f0, x0, y0 = waypoints[-1]
    return (x0, y0) if frame == f0 else None


def _signature(rng, dim=48):
    v = np.abs(rng.normal(size=dim))
    return v / np.linalg.norm(v)


def _noisy_descriptor(rng, signature, noise):
    v = np.clip(signature + noise * rng.normal(size=signature.size), 0.0, None)
    n = np.linalg.norm(v)
    return v / n if n > 0 else signature.copy()


def generate_scenario(spec: ScenarioSpec) -> Scenario:
    """Detections, ground truth and identity signatures for a seeded scene.

    Occluded frames emit no detection for the target and mark its ground
    truth row as not considered. Clutter detections get fresh signatures
    and negative tags.
    """
    rng = np.random.default_rng(spec.seed)
    signatures = {t.id: _signature(rng) for t in spec.targets}
    detections, gt = {}, []
    clutter_tag = -1
    for frame in range(1, spec.n_frames + 1):
        frame_dets = []
        visible = 0
        for t in spec.targets:
            pos = _position(t.waypoints, frame)
            if pos is None:
                continue
            w, h = t.size
            occluded = any(a <= frame <= b for a, b in t.occluded)
            gt.append(GtRow(frame, t.id, pos[0] - w / 2, pos[1] - h / 2, w, h, not occluded))
            if occluded:
                continue
            visible += 1
            if spec.dropout > 0 and rng.random() < spec.dropout:
                continue
            cx = pos[0] + spec.pos_noise * rng.normal() if spec.pos_noise else pos[0]
            cy = pos[1] + spec.pos_noise * rng.normal() if spec.pos_noise else pos[1]
            dw = max(0.2 * w, w + spec.size_noise * rng.normal()) if spec.size_noise else w
            dh = max(0.2 * h, h + spec.size_noise * rng.normal()) if spec.size_noise else h
            desc = AppearanceDescriptor(vector=_noisy_descriptor(rng, signatures[t.id], spec.descriptor_noise),
                                        tag=t.id)
            conf = float(rng.uniform(0.6, 1.0))
            frame_dets.append((BoundingBox.from_center(cx, cy, dw, dh), conf, desc))
        n_clutter = rng.poisson(spec.clutter_rate * visible) if spec.clutter_rate > 0 else 0
        for _ in range(n_clutter):
            w = float(rng.uniform(25.0, 60.0))
            h = float(rng.uniform(2.0, 3.0)) * w
            left = float(rng.uniform(0.0, max(1.0, spec.arena[0] - w)))
            top = float(rng.uniform(0.0, max(1.0, spec.arena[1] - h)))
            desc = AppearanceDescriptor(vector=_signature(rng), tag=clutter_tag)
            clutter_tag -= 1
            frame_dets.append((BoundingBox(left, top, w, h), float(rng.uniform(0.3, 0.6)), desc))
        order = rng.permutation(len(frame_dets)) if len(frame_dets) > 1 else range(len(frame_dets))
        detections[frame] = [Detection(frame, frame_dets[k][0], frame_dets[k][1], frame_dets[k][2], index=n)
                             for n, k in enumerate(order)]
    return Scenario(detections, gt, signatures, list(range(1, spec.n_frames + 1)))


def crossing_spec(seed: int = 7, occlusion: int = 8, pos_noise: float = 2.0) -> ScenarioSpec:
    """Two pedestrians walking toward each other at 4 px/frame, slowing to
    1 px/frame while they pass (frames 44-56) and swapping sides between
    frames 40 and 60. The one walking left is hidden behind the other for
    ``occlusion`` frames around the crossing point (frame 50)."""
    first = 50 - occlusion // 2
    return ScenarioSpec(
        targets=[
            TargetSpec(1, [(1, 138.0, 240.0), (44, 310.0, 240.0), (56, 322.0, 240.0), (100, 498.0, 240.0)]),
            TargetSpec(2, [(1, 494.0, 246.0), (44, 322.0, 246.0), (56, 310.0, 246.0), (100, 134.0, 246.0)],
                       occluded=[(first, first + occlusion - 1)]),
        ],
        n_frames=100,
        pos_noise=pos_noise,
        size_noise=1.0,
        descriptor_noise=0.05,
        seed=seed,
    )


def single_target_spec(n_frames: int = 20, seed: int = 0) -> ScenarioSpec:
    return ScenarioSpec(targets=[TargetSpec(1, [(1, 100.0, 200.0), (n_frames, 100.0 + 3 * n_frames, 200.0)])],
                        n_frames=n_frames, seed=seed)


def noisy_scene_spec(seed: int = 0, n_targets: int = 6, n_frames: int = 120, dropout: float = 0.2,
                     clutter_rate: float = 0.1, pos_noise: float = 4.0) -> ScenarioSpec:
    """Targets on random straight paths with detector dropout and clutter."""
    rng = np.random.default_rng(seed)
    targets = []
    for tid in range(1, n_targets + 1):
        w = float(rng.uniform(30.0, 55.0))
        size = (w, w * float(rng.uniform(2.2, 2.8)))
        start = int(rng.integers(1, n_frames // 3))
        end = int(rng.integers(2 * n_frames // 3, n_frames + 1))
        x0, y0 = rng.uniform([60.0, 80.0], [580.0, 400.0])
        speed = rng.uniform(1.0, 5.0)
        angle = rng.uniform(0.0, 2.0 * np.pi)
        x1 = float(np.clip(x0 + speed * np.cos(angle) * (end - start), 30.0, 610.0))
        y1 = float(np.clip(y0 + speed * np.sin(angle) * (end - start), 60.0, 420.0))
        targets.append(TargetSpec(tid, [(start, float(x0), float(y0)), (end, x1, y1)], size))
    return ScenarioSpec(targets=targets, n_frames=n_frames, pos_noise=pos_noise, size_noise=2.0,
                        dropout=dropout, clutter_rate=clutter_rate, descriptor_noise=0.05, seed=seed)
