import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from tamatrack import _backend
from tamatrack.assoc import hungarian

from .oracles import brute_force_assignment

costs = st.integers(1, 6).flatmap(
    lambda n: arrays(np.float64, (n, n), elements=st.floats(-100, 100, allow_nan=False, width=32)))


@settings(max_examples=150, deadline=None)
@given(costs)
def test_lsap_optimal(cost):
    total, _ = brute_force_assignment(cost.tolist())
    for name in _backend.available():
        cols = _backend.get(name).lsap_square(np.ascontiguousarray(cost))
        assert sorted(cols.tolist()) == list(range(len(cost)))
        assert sum(cost[i, c] for i, c in enumerate(cols)) == pytest.approx(total, abs=1e-9)


def test_backends_identical_on_random_inputs():
    if len(_backend.available()) < 2:
        pytest.skip("compiled extension not built")
    cy, py = _backend.get("cython"), _backend.get("python")
    rng = np.random.default_rng(0)
    for n in range(1, 12):
        cost = np.ascontiguousarray(rng.random((n, n)))
        assert np.array_equal(cy.lsap_square(cost), py.lsap_square(cost))
    a = np.ascontiguousarray(np.column_stack([rng.uniform(0, 100, (9, 2)), rng.uniform(1, 40, (9, 2))]))
    assert np.array_equal(cy.iou_matrix(a, a), py.iou_matrix(a, a))
    w = np.ascontiguousarray(rng.normal(0, 0.2, (4 * 6, 6 + 5)))
    seq = np.ascontiguousarray(rng.normal(size=(15, 5)))
    hc, cc = cy.lstm_sequence(w, np.zeros(24), seq, np.zeros(6), np.zeros(6))
    hp, cp = py.lstm_sequence(w, np.zeros(24), seq, np.zeros(6), np.zeros(6))
    assert np.allclose(hc, hp, atol=1e-13) and np.allclose(cc, cp, atol=1e-13)


def test_kernel_shape_errors(kern):
    with pytest.raises(ValueError):
        kern.lstm_sequence(np.zeros((8, 5)), np.zeros(8), np.zeros((3, 4)), np.zeros(2), np.zeros(2))


def test_forced_fallback_env(monkeypatch):
    import importlib
    monkeypatch.setenv("TAMATRACK_PURE", "1")
    mod = importlib.reload(_backend)
    try:
        assert mod.BACKEND == "python"
    finally:
        monkeypatch.delenv("TAMATRACK_PURE")
        importlib.reload(_backend)
    assert hungarian([[1.0, 0.0], [0.0, 1.0]], backend="python") == [(0, 1), (1, 0)]
