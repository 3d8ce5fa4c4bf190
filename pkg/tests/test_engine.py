import numpy as np
import pytest

from tamatrack.appearance import OracleScorer
from tamatrack.assoc import AppearanceModel
from tamatrack.core import NonMonotoneFrame, TrackerConfig
from tamatrack.engine import Engine, run_sequence
from tamatrack.evaluation import crossing_spec, generate_scenario, single_target_spec

from .helpers import make_det


def oracle_model():
    return AppearanceModel(scorer=OracleScorer())


def test_zero_frames():
    assert run_sequence({}, TrackerConfig(), oracle_model()) == []


def test_single_target_one_id():
    scene = generate_scenario(single_target_spec(20))
    rows = run_sequence(scene.detections, TrackerConfig(), oracle_model())
    assert {r.id for r in rows} == {1}
    assert [r.frame for r in rows] == list(range(1, 21))


def test_birth_rows_are_backdated_and_sorted():
    scene = generate_scenario(single_target_spec(8))
    engine = Engine(TrackerConfig(), oracle_model())
    events = [engine.step(f, scene.detections[f]) for f in range(1, 9)]
    assert [e.births for e in events[:5]] == [[], [], [], [], [1]]
    assert [r.frame for r in events[4].rows] == [1, 2, 3, 4, 5]
    assert events[5].matches == [(1, 0)]
    rows = engine.sorted_results()
    assert rows == sorted(rows, key=lambda r: (r.frame, r.id))


def test_empty_frame_increments_misses():
    scene = generate_scenario(single_target_spec(6))
    engine = Engine(TrackerConfig(), oracle_model())
    for f in range(1, 6):
        engine.step(f, scene.detections[f])
    events = engine.step(6, [])
    assert events.births == [] and engine.tracks[0].miss_count == 1


def test_match_resets_misses_and_feeds_cue():
    scene = generate_scenario(single_target_spec(20))
    engine = Engine(TrackerConfig(), oracle_model())
    for f in range(1, 8):
        engine.step(f, scene.detections[f])
    engine.step(8, [])
    engine.step(9, scene.detections[9])
    trk = engine.tracks[0]
    assert trk.miss_count == 0 and trk.last_matched_frame == 9
    assert trk.cue and all(e.confidence > 0.6 for e in trk.cue)


def test_frames_must_increase():
    engine = Engine(TrackerConfig(), oracle_model())
    engine.step(3, [])
    with pytest.raises(NonMonotoneFrame):
        engine.step(3, [])
    with pytest.raises(NonMonotoneFrame):
        engine.step(4, [make_det(10, 10, frame=5)])


def test_mode_requirements():
    with pytest.raises(ValueError):
        Engine(TrackerConfig(likelihood_mode="deep_tama"), oracle_model())
    with pytest.raises(ValueError):
        Engine(TrackerConfig(), AppearanceModel())


@pytest.mark.parametrize("mode", ["ctama", "baseline_linear", "baseline_select"])
def test_modes_run_on_crossing(mode):
    scene = generate_scenario(crossing_spec())
    from tamatrack.appearance import EmbeddingScorer
    scorer = OracleScorer() if mode == "ctama" else EmbeddingScorer()
    rows = run_sequence(scene.detections, TrackerConfig(likelihood_mode=mode), AppearanceModel(scorer=scorer))
    assert rows and len({r.id for r in rows}) >= 2


def test_replay_identical():
    scene = generate_scenario(crossing_spec())
    a = run_sequence(scene.detections, TrackerConfig(), oracle_model())
    b = run_sequence(scene.detections, TrackerConfig(workers=3), oracle_model())
    assert a == b
