"""Gated similarity construction, linear assignment and match validation."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _backend
from .core import TrackerConfig
from .geometry import iou, motion_likelihood, shape_likelihood
from .tama import (assemble_sequence, ctama_combine, ctama_likelihood, deep_tama_from_sequence,
                   deep_tama_likelihood, deep_tama_pairs, relative_shape_difference)


@dataclass
class SimilarityMatrix:
    values: np.ndarray  # likelihood per (track, detection); 0 where gated out
    gate: np.ndarray  # True where the pair passed geometric gating
    motion: np.ndarray
    shape: np.ndarray
    appearance: np.ndarray

    @property
    def dims(self) -> tuple[int, int]:
        return self.values.shape


@dataclass
class AppearanceModel:
    """What scores appearance: a pairwise scorer, or a feature provider plus LSTM weights."""

    scorer: object = None
    provider: object = None
    weights: object = None
    lambda_f: float | None = None

    def prepare(self, desc):
        if desc is None:
            return None
        if self.provider is not None:
            return self.provider.prepare(desc)
        if self.scorer is not None:
            return self.scorer.prepare(desc)
        return desc


def _map(fn, items, workers: int) -> list:
    if workers <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _geometry(tracks, dets, cfg):
    n, m = len(tracks), len(dets)
    motion = np.zeros((n, m))
    shape = np.zeros((n, m))
    for i, trk in enumerate(tracks):
        box = trk.box
        for j, det in enumerate(dets):
            motion[i, j] = motion_likelihood(trk, det, cfg)
            shape[i, j] = shape_likelihood(box, det.box, cfg)
    return motion, shape


def build_similarity(tracks, dets, cfg: TrackerConfig, model: AppearanceModel) -> SimilarityMatrix:
    """Similarity matrix via the two-stage batch plan.

    Stage one scores (or featurizes) every template/observation pair that
    survives gating as one flat batch; stage two runs the per-pair
    association (confidence mixing or LSTM unroll) as a second batch.
    """
    n, m = len(tracks), len(dets)
    if cfg.likelihood_mode == "iou_only":
        values = np.array([[iou(t.box, d.box) for d in dets] for t in tracks]).reshape(n, m)
        ones = np.ones((n, m))
        return SimilarityMatrix(values, np.ones((n, m), dtype=bool), ones, ones, ones)

    motion, shape = _geometry(tracks, dets, cfg)
    gate = motion * shape > cfg.tau_match
    pairs = [(int(i), int(j)) for i, j in zip(*np.nonzero(gate))]
    app = np.zeros((n, m))
    mode = cfg.likelihood_mode
    workers = cfg.workers

    if mode == "deep_tama":
        templates = {i: deep_tama_pairs(tracks[i], None) for i in {i for i, _ in pairs}}
        jobs = [(desc, dets[j].descriptor) for i, j in pairs for desc, _ in templates[i]]
        feats = _map(lambda ab: model.provider.feature(*ab), jobs, workers)
        seqs = []
        cursor = 0
        for i, j in pairs:
            k = len(templates[i])
            diffs = [relative_shape_difference(box, dets[j].box) for _, box in templates[i]]
            seqs.append(assemble_sequence(feats[cursor:cursor + k], diffs, model.weights))
            cursor += k
        probs = _map(lambda s: deep_tama_from_sequence(s, model.weights), seqs, workers)
        for (i, j), p in zip(pairs, probs):
            app[i, j] = p
        values = np.where(gate, motion * app, 0.0)
    else:
        if mode == "ctama":
            jobs, spans = [], []
            for i, j in pairs:
                z = dets[j].descriptor
                start = len(jobs)
                jobs.append((z, tracks[i].recent_appearance))
                jobs.extend((z, e.descriptor) for e in tracks[i].cue)
                spans.append((start, len(jobs)))
            scores = _map(lambda ab: model.scorer.score(*ab), jobs, workers)
            for (i, j), (lo, hi) in zip(pairs, spans):
                trk = tracks[i]
                app[i, j] = ctama_combine(trk.recent_confidence, scores[lo],
                                          [e.confidence for e in trk.cue], scores[lo + 1:hi], cfg.lambda_c)
        else:  # baseline_linear / baseline_select: one template per track
            jobs = [(dets[j].descriptor, tracks[i].model_appearance) for i, j in pairs]
            scores = _map(lambda ab: model.scorer.score(*ab), jobs, workers)
            for (i, j), s in zip(pairs, scores):
                app[i, j] = s
        values = np.where(gate, motion * shape * app, 0.0)
    return SimilarityMatrix(values, gate, motion, shape, app)


def build_similarity_naive(tracks, dets, cfg: TrackerConfig, model: AppearanceModel) -> SimilarityMatrix:
    """Pair-by-pair reference for ``build_similarity``."""
    n, m = len(tracks), len(dets)
    if cfg.likelihood_mode == "iou_only":
        return build_similarity(tracks, dets, cfg, model)
    motion, shape = _geometry(tracks, dets, cfg)
    gate = motion * shape > cfg.tau_match
    app = np.zeros((n, m))
    values = np.zeros((n, m))
    for i, trk in enumerate(tracks):
        for j, det in enumerate(dets):
            if not gate[i, j]:
                continue
            if cfg.likelihood_mode == "deep_tama":
                app[i, j] = deep_tama_likelihood(trk, det, model.provider, model.weights, cfg)
                values[i, j] = motion[i, j] * app[i, j]
            else:
                if cfg.likelihood_mode == "ctama":
                    app[i, j] = ctama_likelihood(trk, det, model.scorer, cfg)
                else:
                    app[i, j] = model.scorer.score(det.descriptor, trk.model_appearance)
                values[i, j] = motion[i, j] * shape[i, j] * app[i, j]
    return SimilarityMatrix(values, gate, motion, shape, app)


def hungarian(cost, backend: str | None = None) -> list[tuple[int, int]]:
    """Minimum-cost one-to-one assignment of min(N, M) pairs.

    Rectangular inputs are padded to square with zero-cost dummies, which
    are stripped from the result.
    """
    cost = np.asarray(cost, dtype=np.float64)
    if cost.ndim != 2:
        raise ValueError("cost must be a 2-d matrix")
    n, m = cost.shape
    if n == 0 or m == 0:
        return []
    if not np.all(np.isfinite(cost)):
        raise ValueError("cost entries must be finite")
    size = max(n, m)
    square = np.zeros((size, size))
    square[:n, :m] = cost
    kern = _backend.kernels if backend is None else _backend.get(backend)
    cols = kern.lsap_square(np.ascontiguousarray(square))
    return [(i, int(cols[i])) for i in range(n) if cols[i] < m]


def validate_matches(assign, sim: SimilarityMatrix | np.ndarray, tau_match: float):
    """Split an assignment into valid pairs and the set of missed track indices."""
    values = sim.values if isinstance(sim, SimilarityMatrix) else np.asarray(sim)
    valid = [(i, j) for i, j in assign if values[i, j] > tau_match]
    matched = {i for i, _ in valid}
    invalid = {i for i in range(values.shape[0]) if i not in matched}
    return valid, invalid
