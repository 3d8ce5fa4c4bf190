"""Temporal appearance matching association.

Two ways of turning a track's appearance history into one likelihood for
an observation:

* confidence-weighted (``ctama_*``): pairwise scores against the recent
  appearance and every cue entry, mixed by stored match confidences;
* LSTM-based (``deep_tama_*``): matching features of each (template,
  observation) pair plus the relative shape difference are unrolled through
  an LSTM, oldest template first and the recent appearance last, and the
  final hidden state is projected to a two-way softmax.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._backend import kernels
from .core import (BoundingBox, DimensionMismatch, EmptyTrackAppearance, Track,
                   TrackerConfig, TrackingError)

WEIGHT_MAGIC = "DTAMA-LSTM v1"


class MalformedWeightFile(TrackingError, ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


# ---------------------------------------------------------------- C-TAMA

def ctama_coefficients(c_rcnt: float, cue_confidences, lambda_c: float) -> tuple[float, np.ndarray]:
    """Mixing weights (recent, per-cue-entry); non-negative and summing to 1."""
    a = c_rcnt / lambda_c
    conf = np.asarray(cue_confidences, dtype=np.float64)
    if conf.size == 0 or conf.sum() <= 0:
        return 1.0, np.zeros(conf.size)
    return a, (1.0 - a) * (conf / conf.sum())


def ctama_combine(c_rcnt: float, recent_score: float, cue_confidences, cue_scores,
                  lambda_c: float) -> float:
    a, w = ctama_coefficients(c_rcnt, cue_confidences, lambda_c)
    if w.size == 0:
        return float(recent_score)
    total_conf = float(np.sum(cue_confidences))
    hist = sum(c * s for c, s in zip(cue_confidences, cue_scores)) / total_conf
    return a * recent_score + (1.0 - a) * hist


def ctama_likelihood(track: Track, obs, scorer, cfg: TrackerConfig) -> float:
    if track.recent_appearance is None:
        raise EmptyTrackAppearance(f"track {track.id} has no recent appearance")
    z = obs.descriptor
    recent = scorer.score(z, track.recent_appearance)
    scores = [scorer.score(z, e.descriptor) for e in track.cue]
    return ctama_combine(track.recent_confidence, recent, [e.confidence for e in track.cue],
                         scores, cfg.lambda_c)


# ---------------------------------------------------------------- LSTM

@dataclass
class LstmWeights:
    w_f: np.ndarray
    w_i: np.ndarray
    w_o: np.ndarray
    w_c: np.ndarray
    w_pos: np.ndarray
    w_neg: np.ndarray
    n_cells: int = 15
    gate_bias: np.ndarray | None = None  # 4H, stacked f, i, o, c
    out_bias: np.ndarray | None = None  # (pos, neg)

    def __post_init__(self):
        mats = [np.asarray(m, dtype=np.float64) for m in (self.w_f, self.w_i, self.w_o, self.w_c)]
        shape = mats[0].shape
        if len(shape) != 2 or any(m.shape != shape for m in mats):
            raise DimensionMismatch("gate matrices must share one 2-d shape")
        hid = shape[0]
        if shape[1] <= hid:
            raise DimensionMismatch("gate matrices need hidden + input columns")
        self.w_f, self.w_i, self.w_o, self.w_c = mats
        self.w_pos = np.asarray(self.w_pos, dtype=np.float64).reshape(-1)
        self.w_neg = np.asarray(self.w_neg, dtype=np.float64).reshape(-1)
        if self.w_pos.shape != (hid,) or self.w_neg.shape != (hid,):
            raise DimensionMismatch("projection vectors must have hidden length")
        self.gate_bias = (np.zeros(4 * hid) if self.gate_bias is None
                          else np.asarray(self.gate_bias, dtype=np.float64).reshape(-1))
        self.out_bias = (np.zeros(2) if self.out_bias is None
                         else np.asarray(self.out_bias, dtype=np.float64).reshape(-1))
        if self.gate_bias.shape != (4 * hid,) or self.out_bias.shape != (2,):
            raise DimensionMismatch("bias block has wrong length")
        if self.n_cells < 1:
            raise DimensionMismatch("need at least one LSTM cell")
        self.stacked = np.ascontiguousarray(np.vstack(mats))

    @property
    def hidden(self) -> int:
        return self.w_f.shape[0]

    @property
    def input_dim(self) -> int:
        return self.w_f.shape[1] - self.hidden

    @property
    def has_bias(self) -> bool:
        return bool(np.any(self.gate_bias) or np.any(self.out_bias))

    @classmethod
    def zeros(cls, hidden=128, input_dim=152, n_cells=15) -> "LstmWeights":
        z = np.zeros((hidden, hidden + input_dim))
        return cls(z, z, z, z, np.zeros(hidden), np.zeros(hidden), n_cells)

    @classmethod
    def random(cls, rng, hidden=128, input_dim=152, n_cells=15, scale=0.1) -> "LstmWeights":
        shape = (hidden, hidden + input_dim)
        mats = [rng.normal(0.0, scale, shape) for _ in range(4)]
        return cls(*mats, rng.normal(0.0, 1.0, hidden), rng.normal(0.0, 1.0, hidden), n_cells)


@dataclass
class LstmState:
    c: np.ndarray
    h: np.ndarray

    @classmethod
    def zeros(cls, hidden: int) -> "LstmState":
        return cls(np.zeros(hidden), np.zeros(hidden))


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def lstm_cell(f_in, prev: LstmState, w: LstmWeights) -> LstmState:
    f_in = np.asarray(f_in, dtype=np.float64)
    if f_in.shape != (w.input_dim,) or prev.h.shape != (w.hidden,) or prev.c.shape != (w.hidden,):
        raise DimensionMismatch("LSTM input or state has the wrong length")
    hid = w.hidden
    joint = np.concatenate([prev.h, f_in])
    b = w.gate_bias
    forget = _sigmoid(w.w_f @ joint + b[:hid])
    inp = _sigmoid(w.w_i @ joint + b[hid:2 * hid])
    out = _sigmoid(w.w_o @ joint + b[2 * hid:3 * hid])
    cand = np.tanh(w.w_c @ joint + b[3 * hid:])
    c = forget * prev.c + inp * cand
    return LstmState(c=c, h=out * np.tanh(c))


def lstm_forward(seq, w: LstmWeights, state: LstmState | None = None) -> LstmState:
    """Unroll the LSTM over ``seq`` (cells x input) with the active kernel backend."""
    seq = np.ascontiguousarray(seq, dtype=np.float64)
    if seq.ndim != 2 or seq.shape[1] != w.input_dim:
        raise DimensionMismatch(f"sequence must be (cells, {w.input_dim}), got {seq.shape}")
    state = state or LstmState.zeros(w.hidden)
    h, c = kernels.lstm_sequence(w.stacked, w.gate_bias, seq,
                                 np.ascontiguousarray(state.h), np.ascontiguousarray(state.c))
    return LstmState(c=np.asarray(c), h=np.asarray(h))


def softmax_positive(h: np.ndarray, w: LstmWeights) -> float:
    s_pos = float(w.w_pos @ h) + w.out_bias[0]
    s_neg = float(w.w_neg @ h) + w.out_bias[1]
    # logistic of the logit gap == first softmax component
    gap = s_neg - s_pos
    if gap > 0:
        e = math.exp(-gap)
        return e / (1.0 + e)
    return 1.0 / (1.0 + math.exp(gap))


def relative_shape_difference(template: BoundingBox, obs: BoundingBox) -> np.ndarray:
    """Signed (width, height) differences of template minus observation, scaled by the observation."""
    return np.array([(template.width - obs.width) / obs.width,
                     (template.height - obs.height) / obs.height])


def deep_tama_pairs(track: Track, obs) -> list:
    """(template descriptor, template box) in unroll order: cue oldest first, recent last."""
    if track.recent_appearance is None:
        raise EmptyTrackAppearance(f"track {track.id} has no recent appearance")
    pairs = [(e.descriptor, e.box if e.box is not None else track.recent_box) for e in track.cue]
    pairs.append((track.recent_appearance, track.recent_box))
    return pairs


def assemble_sequence(features, shape_diffs, w: LstmWeights) -> np.ndarray:
    """Stack cell inputs and left-pad with zero cells up to ``w.n_cells``."""
    n_real = len(features)
    if n_real > w.n_cells:
        raise DimensionMismatch(f"{n_real} real cells exceed the {w.n_cells}-cell unroll")
    seq = np.zeros((w.n_cells, w.input_dim))
    for k, (f, d) in enumerate(zip(features, shape_diffs)):
        row = np.concatenate([np.asarray(f, dtype=np.float64), d])
        if row.shape != (w.input_dim,):
            raise DimensionMismatch(f"cell input has {row.size} entries, expected {w.input_dim}")
        seq[w.n_cells - n_real + k] = row
    return seq


def deep_tama_sequence(track: Track, obs, provider, w: LstmWeights) -> np.ndarray:
    templates = deep_tama_pairs(track, obs)
    feats = [provider.feature(desc, obs.descriptor) for desc, _ in templates]
    diffs = [relative_shape_difference(box, obs.box) for _, box in templates]
    return assemble_sequence(feats, diffs, w)


def deep_tama_from_sequence(seq: np.ndarray, w: LstmWeights) -> float:
    return softmax_positive(lstm_forward(seq, w).h, w)


def deep_tama_likelihood(track: Track, obs, provider, w: LstmWeights, cfg: TrackerConfig | None = None) -> float:
    return deep_tama_from_sequence(deep_tama_sequence(track, obs, provider, w), w)


def make_probe_weights(hidden=128, input_dim=152, n_cells=15, gain=20.0, l2_weight=1.5) -> LstmWeights:
    """Untrained, hand-set weights that read the synthetic pair feature.

    Hidden unit 0 integrates the cosine entry, unit 1 the L2-distance entry
    of each matching feature; the positive logit follows unit 0 and the
    negative logit unit 1. Meant for smoke tests on synthetic scenes.
    """
    if input_dim < 152 or hidden < 2:
        raise DimensionMismatch("probe weights need the 150-d pair feature layout and >= 2 hidden units")
    w = LstmWeights.zeros(hidden, input_dim, n_cells)
    w_c = w.w_c.copy()
    w_c[0, hidden + 149] = 1.0
    w_c[1, hidden + 145] = 1.0
    w_pos = np.zeros(hidden)
    w_neg = np.zeros(hidden)
    w_pos[0] = gain
    w_neg[1] = gain * l2_weight
    return LstmWeights(w.w_f, w.w_i, w.w_o, w_c, w_pos, w_neg, n_cells)


# ---------------------------------------------------------------- weight file

def _fmt(values) -> str:
    return " ".join(repr(float(v)) for v in values)


def save_lstm_weights(w: LstmWeights, path) -> None:
    lines = [WEIGHT_MAGIC,
             f"hidden={w.hidden} input={w.input_dim} cells={w.n_cells} bias={int(w.has_bias)}"]
    for mat in (w.w_f, w.w_i, w.w_o, w.w_c):
        lines.extend(_fmt(row) for row in mat)
    lines.append(_fmt(w.w_pos))
    lines.append(_fmt(w.w_neg))
    if w.has_bias:
        hid = w.hidden
        for g in range(4):
            lines.append(_fmt(w.gate_bias[g * hid:(g + 1) * hid]))
        lines.append(_fmt(w.out_bias))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _parse_floats(text: str, lineno: int, expected: int) -> np.ndarray:
    parts = text.split()
    if len(parts) != expected:
        raise DimensionMismatch(f"line {lineno}: expected {expected} values, found {len(parts)}")
    try:
        return np.array([float(p) for p in parts])
    except ValueError as exc:
        raise MalformedWeightFile(lineno, f"bad number ({exc})") from None


def load_lstm_weights(path) -> LstmWeights:
    raw = Path(path).read_text(encoding="utf-8")
    lines = raw.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or lines[0].strip() != WEIGHT_MAGIC:
        raise MalformedWeightFile(1, f"expected header {WEIGHT_MAGIC!r}")
    if len(lines) < 2:
        raise MalformedWeightFile(2, "missing dimension line")
    dims = {}
    for token in lines[1].split():
        key, sep, value = token.partition("=")
        if not sep:
            raise MalformedWeightFile(2, f"bad token {token!r}")
        try:
            dims[key] = int(value)
        except ValueError:
            raise MalformedWeightFile(2, f"non-integer value in {token!r}") from None
    missing = {"hidden", "input", "cells", "bias"} - dims.keys()
    if missing:
        raise MalformedWeightFile(2, f"missing keys {sorted(missing)}")
    hid, n_in, cells, bias = dims["hidden"], dims["input"], dims["cells"], dims["bias"]
    if hid < 1 or n_in < 1 or cells < 1 or bias not in (0, 1):
        raise MalformedWeightFile(2, "dimensions must be positive and bias 0 or 1")
    expected = 2 + 4 * hid + 2 + (5 if bias else 0)
    if len(lines) < expected:
        raise MalformedWeightFile(len(lines) + 1, f"truncated: expected {expected} lines, found {len(lines)}")
    if len(lines) > expected:
        raise MalformedWeightFile(expected + 1, "unexpected trailing content")
    cursor = 2
    mats = []
    for _ in range(4):
        rows = [_parse_floats(lines[cursor + r], cursor + r + 1, hid + n_in) for r in range(hid)]
        mats.append(np.vstack(rows))
        cursor += hid
    w_pos = _parse_floats(lines[cursor], cursor + 1, hid)
    w_neg = _parse_floats(lines[cursor + 1], cursor + 2, hid)
    cursor += 2
    gate_bias = out_bias = None
    if bias:
        gate_bias = np.concatenate([_parse_floats(lines[cursor + g], cursor + g + 1, hid) for g in range(4)])
        out_bias = _parse_floats(lines[cursor + 4], cursor + 5, 2)
    return LstmWeights(*mats, w_pos, w_neg, cells, gate_bias, out_bias)
