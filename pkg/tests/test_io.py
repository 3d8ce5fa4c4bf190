import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tamatrack import io
from tamatrack.core import ConfigError, DimensionMismatch, TrackerConfig
from tamatrack.engine import ResultRow
from tamatrack.evaluation import GtRow


def write(tmp_path, text, name="f.txt"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_parse_detection_row(tmp_path):
    dets = io.parse_detections(write(tmp_path, "1,-1,10,20,30,60,0.9,-1,-1,-1\n"))
    (d,) = dets[1]
    assert d.box.as_tuple() == (10, 20, 30, 60) and d.confidence == 0.9 and d.index == 0


def test_detection_grouping_and_raw_confidence(tmp_path):
    text = "2,-1,0,0,5,5,1.5\n1,-1,0,0,5,5,0.3\n2,-1,9,9,5,5,-0.2\n"
    dets = io.parse_detections(write(tmp_path, text))
    assert list(dets) == [1, 2]
    assert [(d.index, d.raw_confidence, d.confidence) for d in dets[2]] == [(0, 1.5, 1.0), (1, -0.2, 0.0)]


def test_empty_file(tmp_path):
    assert io.parse_detections(write(tmp_path, "")) == {}


@pytest.mark.parametrize("row, line", [
    ("1,-1,10,20,0,60", 2),
    ("1,-1,10,20,abc,60", 2),
    ("0,-1,10,20,5,5", 2),
    ("1,-1,10,20", 2),
    ("1.5,-1,10,20,5,5", 2),
])
def test_malformed_rows_name_line(tmp_path, row, line):
    with pytest.raises(io.MalformedRow) as info:
        io.parse_detections(write(tmp_path, f"1,-1,0,0,5,5\n{row}\n"))
    assert info.value.line == line


def test_results_written_in_order(tmp_path):
    rows = [ResultRow(2, 1, 0, 0, 5, 5), ResultRow(1, 2, 1.25, 0, 5, 5), ResultRow(1, 1, 0, 0, 5, 5)]
    path = tmp_path / "r.txt"
    io.write_results(rows, path)
    assert path.read_text().splitlines() == ["1,1,0,0,5,5,1,-1,-1,-1", "1,2,1.25,0,5,5,1,-1,-1,-1",
                                             "2,1,0,0,5,5,1,-1,-1,-1"]
    assert io.parse_results(path) == sorted(rows)
    io.write_results([], path)
    assert path.read_text() == ""


floats = st.floats(-1e4, 1e4, allow_nan=False, allow_infinity=False)
sizes = st.floats(1e-3, 1e4, allow_nan=False)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(1, 10**6), st.integers(-1, 10**6), floats, floats, sizes, sizes, floats),
                max_size=20))
def test_mot_rows_round_trip(tmp_path_factory, data):
    rows = [io.MotRow(*t) for t in data]
    path = tmp_path_factory.mktemp("mot") / "rows.txt"
    io.write_mot_rows(rows, path)
    assert io.parse_mot_rows(path) == rows


def test_feature_file(tmp_path):
    rng = np.random.default_rng(0)
    lookup = {(1, 0): rng.normal(size=150), (1, 1): rng.normal(size=150)}
    path = tmp_path / "feat.txt"
    io.write_feature_file(lookup, path)
    back = io.parse_feature_file(path)
    assert back.keys() == lookup.keys()
    assert all(np.array_equal(back[k], lookup[k]) for k in lookup)


def test_feature_file_errors(tmp_path):
    with pytest.raises(io.DuplicateKey):
        io.parse_feature_file(write(tmp_path, "1,0,2,0.1,0.2\n1,0,2,0.3,0.4\n"))
    row150 = "1,0,150," + ",".join(["0.5"] * 150)
    row148 = "1,1,148," + ",".join(["0.5"] * 148)
    with pytest.raises(DimensionMismatch):
        io.parse_feature_file(write(tmp_path, row150 + "\n" + row148 + "\n"))
    with pytest.raises(io.MalformedRow):
        io.parse_feature_file(write(tmp_path, "1,0,3,0.1,0.2\n"))


def test_gt_round_trip(tmp_path):
    rows = [GtRow(1, 1, 0.5, 2, 10, 20, True), GtRow(1, 2, 3, 4, 5, 6, False), GtRow(2, 1, 1, 2, 10, 20)]
    path = tmp_path / "gt.txt"
    io.write_gt(rows, path)
    assert io.parse_gt(path) == rows


def test_tag_file(tmp_path):
    path = tmp_path / "tags.txt"
    io.write_tag_file({(2, 0): 5, (1, 3): -1}, path)
    assert io.parse_tag_file(path) == {(1, 3): -1, (2, 0): 5}


def test_config_parsing(tmp_path):
    cfg = io.parse_config_text("# tuned\nfps = 25\ntau_cue=6  # shorter cue\nlikelihood_mode = deep_tama\n"
                               "lambda_f = none\n")
    assert (cfg.fps, cfg.tau_cue, cfg.likelihood_mode, cfg.lambda_f) == (25, 6, "deep_tama", None)
    assert io.parse_config_text(io.format_config(TrackerConfig())) == TrackerConfig()
    with pytest.raises(ConfigError, match="bogus"):
        io.parse_config_text("bogus = 1\n")
    with pytest.raises(ConfigError):
        io.parse_config_text("tau_cue = 0\n")
    with pytest.raises(ConfigError):
        io.parse_config_text("fps 30\n")


def test_ppm_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    img = rng.integers(0, 256, (128, 64, 3)) / 255.0
    path = tmp_path / "p.ppm"
    io.write_ppm(img, path)
    assert np.allclose(io.read_ppm(path), img, atol=1e-12)
    io.write_ppm(rng.random((30, 20, 3)), path)
    assert io.load_patch(path).patch.shape == (128, 64, 3)
