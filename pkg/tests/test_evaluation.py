import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import kbiclust.evaluation as ev
from kbiclust import (AkkbConfig, Bipartition, DataError, ScenarioSpec, bandwidth_sweep,
                      bicluster_accuracy, clustering_accuracy, gen_scenario)


def test_accuracy_hand_values():
    assert clustering_accuracy([1, 1, 0, 0], [0, 0, 1, 1]) == (1.0, (1, 0))
    acc, _ = clustering_accuracy([0, 0, 0, 1], [0, 0, 1, 1])
    assert acc == 0.75
    acc, _ = clustering_accuracy([0, 1, 0, 1], [0, 0, 1, 1])
    assert acc == 0.5


def test_accuracy_errors():
    with pytest.raises(DataError):
        clustering_accuracy([0, 1], [0, 1, 1])
    with pytest.raises(DataError):
        clustering_accuracy([], [])
    with pytest.raises(DataError):
        clustering_accuracy([-1, 0], [0, 1])


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 10**6), k=st.integers(2, 5))
def test_accuracy_relabel_invariant_and_brute_force(seed, k):
    r = np.random.default_rng(seed)
    truth = r.integers(k, size=30)
    pred = r.integers(k, size=30)
    perm = r.permutation(k)
    acc, mapping = clustering_accuracy(pred, truth)
    assert clustering_accuracy(perm[pred], truth)[0] == acc
    brute = max(np.mean(np.array(p)[pred] == truth) for p in itertools.permutations(range(k)))
    assert acc == pytest.approx(brute, abs=1e-15)
    assert np.mean(np.array(mapping)[pred] == truth) == pytest.approx(acc, abs=1e-15)
    assert 1.0 / k - 1e-12 <= acc <= 1.0


def test_assignment_solver_agrees_with_search(monkeypatch):
    r = np.random.default_rng(0)
    truth = r.integers(6, size=80)
    pred = np.where(r.random(80) < 0.7, (truth + 2) % 6, r.integers(6, size=80))
    exact = clustering_accuracy(pred, truth)[0]
    monkeypatch.setattr(ev, "EXACT_SEARCH_MAX", 0)
    assert clustering_accuracy(pred, truth)[0] == exact


def test_bicluster_report():
    rep = bicluster_accuracy(Bipartition([1, 1, 0, 0], [0, 1, 1], 2), [0, 0, 1, 1], [0, 1, 0])
    assert rep.row_accuracy == 1.0
    assert rep.col_accuracy == pytest.approx(2 / 3)
    assert rep.mean_accuracy == pytest.approx(5 / 6)
    assert set(rep.to_dict()) >= {"row_accuracy", "col_accuracy", "mean_accuracy"}


def test_sweep_shape_and_validation():
    m, rows, cols = gen_scenario(ScenarioSpec(2, n=16, p=16, seed=1))
    cfg = AkkbConfig(rounds=2, restarts=3)
    res = bandwidth_sweep(m, rows, cols, cfg, [0.5, 1.0], [1.0, 2.0, 4.0])
    assert res.accuracy.shape == (2, 3)
    assert np.all((res.accuracy >= 0.5) & (res.accuracy <= 1.0))
    assert res.spread == res.accuracy.max() - res.accuracy.min()
    with pytest.raises(DataError):
        bandwidth_sweep(m, rows, cols, cfg, [], [1.0])
    with pytest.raises(DataError):
        bandwidth_sweep(m, rows, cols, cfg, [0.0], [1.0])


def test_sweep_parallel_matches_serial():
    m, rows, cols = gen_scenario(ScenarioSpec(1, n=16, p=16, seed=2))
    cfg = AkkbConfig(rounds=2, restarts=3)
    a = bandwidth_sweep(m, rows, cols, cfg, [0.5, 2.0], [1.0])
    b = bandwidth_sweep(m, rows, cols, cfg, [0.5, 2.0], [1.0], workers=2)
    assert a.accuracy.tobytes() == b.accuracy.tobytes()
