import math

import numpy as np
import pytest

from tamatrack.appearance import ConstantScorer, OracleScorer, SyntheticPairFeature
from tamatrack.core import AppearanceDescriptor, BoundingBox, CueEntry, DimensionMismatch, EmptyTrackAppearance
from tamatrack.tama import (LstmState, LstmWeights, MalformedWeightFile, assemble_sequence, ctama_coefficients,
                            ctama_combine, ctama_likelihood, deep_tama_likelihood, load_lstm_weights, lstm_cell,
                            lstm_forward, make_probe_weights, relative_shape_difference, save_lstm_weights)

from .helpers import make_det, make_track
from .oracles import lstm_oracle


def test_ctama_hand_example():
    value = ctama_combine(0.6, 0.9, [0.5, 1.0], [0.3, 0.6], 3.0)
    assert value == pytest.approx(0.58, abs=1e-12)


def test_ctama_degenerate_cases():
    assert ctama_combine(0.4, 0.7, [], [], 3.0) == 0.7
    assert ctama_combine(0.9, 0.35, [0.7, 0.8, 0.95], [0.35] * 3, 3.0) == pytest.approx(0.35, abs=1e-15)
    a, w = ctama_coefficients(0.9, [0.7, 0.8], 3.0)
    assert a + w.sum() == pytest.approx(1.0, abs=1e-15)


def test_ctama_likelihood_from_track(cfg):
    scorer = OracleScorer()
    me, other = AppearanceDescriptor(tag=1), AppearanceDescriptor(tag=2)
    trk = make_track(desc=me, conf=0.6)
    trk.cue = [CueEntry(0.8, me, 1, trk.recent_box), CueEntry(0.9, other, 7, trk.recent_box)]
    obs = make_det(100, 100, tag=1)
    hist = (0.8 * 0.9 + 0.9 * 0.1) / 1.7
    assert ctama_likelihood(trk, obs, scorer, cfg) == pytest.approx(0.2 * 0.9 + 0.8 * hist, abs=1e-12)
    with pytest.raises(EmptyTrackAppearance):
        ctama_likelihood(make_track(desc=None), obs, scorer, cfg)


def test_zero_weights_cell():
    w = LstmWeights.zeros(hidden=4, input_dim=3)
    out = lstm_cell(np.array([1.0, -2.0, 3.0]), LstmState.zeros(4), w)
    assert not out.c.any() and not out.h.any()


def test_cell_matches_oracle():
    rng = np.random.default_rng(5)
    w = LstmWeights.random(rng, hidden=6, input_dim=5)
    x = rng.normal(size=5)
    out = lstm_cell(x, LstmState.zeros(6), w)
    h, c = lstm_oracle(w.w_f.tolist(), w.w_i.tolist(), w.w_o.tolist(), w.w_c.tolist(), [x])
    assert np.allclose(out.h, h, atol=1e-12) and np.allclose(out.c, c, atol=1e-12)
    assert np.all(np.abs(out.h) < 1)


def test_forward_equals_repeated_cell(kern):
    rng = np.random.default_rng(8)
    w = LstmWeights.random(rng, hidden=8, input_dim=6, n_cells=5)
    seq = rng.normal(size=(5, 6))
    state = LstmState.zeros(8)
    for x in seq:
        state = lstm_cell(x, state, w)
    h, c = kern.lstm_sequence(w.stacked, w.gate_bias, np.ascontiguousarray(seq), np.zeros(8), np.zeros(8))
    assert np.allclose(h, state.h, atol=1e-12) and np.allclose(c, state.c, atol=1e-12)
    with pytest.raises(DimensionMismatch):
        lstm_forward(np.zeros((5, 7)), w)


def test_relative_shape_difference():
    d = relative_shape_difference(BoundingBox(0, 0, 60, 110), BoundingBox(5, 5, 50, 100))
    assert np.allclose(d, [0.2, 0.1], atol=1e-15)


def _deep_track(rng, n_cue=3):
    vec = lambda: AppearanceDescriptor(vector=np.abs(rng.normal(size=48)))
    trk = make_track(desc=vec())
    trk.cue = [CueEntry(0.9, vec(), 1 + 6 * k, trk.recent_box) for k in range(n_cue)]
    return trk


def test_equal_projections_give_half():
    rng = np.random.default_rng(2)
    w = LstmWeights.random(rng, hidden=16, input_dim=152)
    w = LstmWeights(w.w_f, w.w_i, w.w_o, w.w_c, w.w_pos, w.w_pos.copy())
    obs = make_det(100, 100, vector=np.abs(rng.normal(size=48)))
    assert deep_tama_likelihood(_deep_track(rng), obs, SyntheticPairFeature(), w) == 0.5
    zero = LstmWeights.zeros(hidden=16, input_dim=152)
    assert deep_tama_likelihood(_deep_track(rng), obs, SyntheticPairFeature(), zero) == 0.5


def test_sequence_layout_pads_at_head():
    w = LstmWeights.zeros(hidden=2, input_dim=4, n_cells=5)
    seq = assemble_sequence([np.ones(2), 2 * np.ones(2)], [np.zeros(2), np.full(2, 3.0)], w)
    assert not seq[:3].any()
    assert np.array_equal(seq[3], [1, 1, 0, 0]) and np.array_equal(seq[4], [2, 2, 3, 3])
    with pytest.raises(DimensionMismatch):
        assemble_sequence([np.ones(2)] * 6, [np.zeros(2)] * 6, w)


def test_probe_weights_prefer_same_identity():
    rng = np.random.default_rng(4)
    sig = np.abs(rng.normal(size=48))
    sig /= np.linalg.norm(sig)
    other = np.abs(rng.normal(size=48))
    other /= np.linalg.norm(other)
    trk = make_track(desc=AppearanceDescriptor(vector=sig))
    w = make_probe_weights()
    same = deep_tama_likelihood(trk, make_det(100, 100, vector=sig), SyntheticPairFeature(), w)
    diff = deep_tama_likelihood(trk, make_det(100, 100, vector=other), SyntheticPairFeature(), w)
    assert same > 0.5 > diff


@pytest.mark.parametrize("with_bias", [False, True])
def test_weight_file_round_trip(tmp_path, with_bias):
    rng = np.random.default_rng(9)
    w = LstmWeights.random(rng, hidden=5, input_dim=7, n_cells=4)
    if with_bias:
        w = LstmWeights(w.w_f, w.w_i, w.w_o, w.w_c, w.w_pos, w.w_neg, 4, rng.normal(size=20), rng.normal(size=2))
    path = tmp_path / "w.txt"
    save_lstm_weights(w, path)
    back = load_lstm_weights(path)
    for name in ("w_f", "w_i", "w_o", "w_c", "w_pos", "w_neg", "gate_bias", "out_bias"):
        assert np.array_equal(getattr(back, name), getattr(w, name))
    assert back.n_cells == 4


def test_full_size_weight_file(tmp_path):
    path = tmp_path / "w.txt"
    save_lstm_weights(LstmWeights.zeros(128, 152, 15), path)
    w = load_lstm_weights(path)
    assert w.w_f.shape == (128, 280) and w.n_cells == 15


def test_truncated_weight_file(tmp_path):
    path = tmp_path / "w.txt"
    save_lstm_weights(LstmWeights.zeros(3, 4, 2), path)
    lines = path.read_text().splitlines()
    path.write_text("\n".join(lines[:-2]) + "\n")
    with pytest.raises(MalformedWeightFile):
        load_lstm_weights(path)
    path.write_text("not a weight file\n")
    with pytest.raises(MalformedWeightFile) as info:
        load_lstm_weights(path)
    assert info.value.line == 1
