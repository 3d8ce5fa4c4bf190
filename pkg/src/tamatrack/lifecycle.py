"""Hypothesis-tree track initialization and miss-count termination."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import count

import numpy as np

from .core import Detection, Track, TrackerConfig
from .geometry import init_state, iou


@dataclass(eq=False)
class Node:
    det: Detection
    parent: "Node | None" = None
    level: int = 1
    order: int = 0  # creation order, for deterministic tie-breaks


@dataclass(eq=False)
class HypothesisTree:
    levels: list = field(default_factory=list)  # list of lists of Node

    @classmethod
    def rooted(cls, det: Detection, order: int = 0) -> "HypothesisTree":
        return cls([[Node(det, None, 1, order)]])

    @property
    def depth(self) -> int:
        return len(self.levels)

    @property
    def deepest(self) -> list:
        return self.levels[-1]


def _center_distance(a, b) -> float:
    return math.hypot(a.center_x - b.center_x, a.center_y - b.center_y)


def _weak_match(node_box, det_box, cfg: TrackerConfig) -> bool:
    d = _center_distance(node_box, det_box)
    s = min(det_box.height / node_box.height, node_box.height / det_box.height)
    return d < cfg.beta_dist * det_box.width and s > cfg.tau_shp


def extend_trees(trees, unmatched, cfg: TrackerConfig, order_source=None):
    """Grow every tree by one level from this frame's unassociated detections.

    Returns (trees, consumed) where ``consumed`` holds the indices into
    ``unmatched`` that attached to an existing tree. Trees that gain no
    child are dropped; detections that attach nowhere root new trees.
    """
    order_source = order_source or count()
    use_iou = cfg.init_mode in ("hierarchical", "iou_only")
    use_dist = cfg.init_mode in ("hierarchical", "distance_only")
    children = {t: [] for t in range(len(trees))}
    owner = {}

    if use_iou:
        best = {}
        for t, tree in enumerate(trees):
            for j, det in enumerate(unmatched):
                scored = [(iou(n.det.box, det.box), -n.order, n) for n in tree.deepest]
                val, _, node = max(scored, key=lambda x: (x[0], x[1]))
                if val > cfg.tau_iou:
                    cand = (val, -t, node)
                    if j not in best or (cand[0], cand[1]) > (best[j][0], best[j][1]):
                        best[j] = cand
        for j in sorted(best):
            val, neg_t, node = best[j]
            owner[j] = -neg_t
            children[-neg_t].append((j, node))

    if use_dist:
        retry = [t for t in range(len(trees)) if not children[t]]
        best = {}
        for t in retry:
            for j, det in enumerate(unmatched):
                if j in owner:
                    continue
                ok = [(_center_distance(n.det.box, det.box), n.order, n)
                      for n in trees[t].deepest if _weak_match(n.det.box, det.box, cfg)]
                if not ok:
                    continue
                dist, _, node = min(ok, key=lambda x: (x[0], x[1]))
                cand = (dist, t, node)
                if j not in best or (cand[0], cand[1]) < (best[j][0], best[j][1]):
                    best[j] = cand
        for j in sorted(best):
            dist, t, node = best[j]
            owner[j] = t
            children[t].append((j, node))

    survivors = []
    for t, tree in enumerate(trees):
        if not children[t]:
            continue
        level = tree.depth + 1
        tree.levels.append([Node(unmatched[j], node, level, next(order_source))
                            for j, node in sorted(children[t], key=lambda x: x[0])])
        survivors.append(tree)
    consumed = set(owner)
    for j, det in enumerate(unmatched):
        if j not in consumed:
            survivors.append(HypothesisTree.rooted(det, next(order_source)))
    return survivors, consumed


def _path(leaf: Node) -> list:
    out = []
    node = leaf
    while node is not None:
        out.append(node)
        node = node.parent
    return out[::-1]  # root -> leaf


def best_path(tree: HypothesisTree) -> list:
    """Root-to-leaf node chain maximizing summed consecutive IoU.

    Ties go to higher mean detection confidence, then lower node orders.
    """
    def key(path):
        score = sum(iou(a.det.box, b.det.box) for a, b in zip(path, path[1:]))
        conf = float(np.mean([n.det.confidence for n in path]))
        return (-score, -conf, [n.order for n in path])

    return min((_path(leaf) for leaf in tree.deepest), key=key)


def promote_trees(trees, cfg: TrackerConfig, id_source):
    """Turn every tree deeper than ``tau_init`` into a track.

    Returns (new_tracks, supports, remaining_trees); ``supports[k]`` lists the
    detections (root first) backing ``new_tracks[k]``.
    """
    new_tracks, supports, remaining = [], [], []
    for tree in trees:
        if tree.depth <= cfg.tau_init:
            remaining.append(tree)
            continue
        path = best_path(tree)[-(cfg.tau_init + 1):]
        dets = [n.det for n in path]
        boxes = [d.box for d in dets]
        state, cov = init_state(boxes, cfg)
        last = dets[-1]
        new_tracks.append(Track(
            id=next(id_source),
            state=state,
            cov=cov,
            shape=(last.box.width, last.box.height),
            recent_appearance=last.descriptor,
            recent_confidence=0.5,
            recent_box=last.box,
            cue=[],
            birth_frame=dets[0].frame,
            last_matched_frame=last.frame,
            model_appearance=last.descriptor,
        ))
        supports.append(dets)
    return new_tracks, supports, remaining


def apply_termination(tracks, cfg: TrackerConfig):
    """Mark tracks whose miss count reached ``round(fps * beta_term)`` as terminated."""
    limit = cfg.tau_term
    out = []
    for trk in tracks:
        if trk.status == "active" and trk.miss_count >= limit:
            trk = trk.copy()
            trk.status = "terminated"
        out.append(trk)
    return out
