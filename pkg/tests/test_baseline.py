import os

import numpy as np
import pytest

from rptsc.baseline import (
    DtwParams,
    dtw_distance,
    dtw_metric,
    euclidean_distance,
    one_nn_classify,
    one_nn_error,
    worker_count,
)
from rptsc.ucr_data import Dataset, TimeSeries

from .conftest import make_wave_dataset
from .oracles import dtw_oracle


def series_of(values, label=0):
    return TimeSeries(values=np.asarray(values, dtype=np.float64),
                      label=label, raw_label=str(label + 1))


def tiny_dataset(rows):
    series = [series_of(vals, label) for vals, label in rows]
    labels = {label for _, label in rows}
    length = len(rows[0][0])
    return Dataset(series, num_classes=len(labels), series_length=length,
                   name="tiny")


def test_euclidean_three_four_five():
    assert euclidean_distance([0.0, 0.0], [3.0, 4.0]) == 5.0
    with pytest.raises(ValueError):
        euclidean_distance([1.0, 2.0], [1.0, 2.0, 3.0])


def test_dtw_frozen_path_enumeration_values():
    # minima confirmed by exhaustive path enumeration
    assert dtw_distance([0.0, 1.0, 2.0], [0.0, 2.0]) == 1.0
    assert dtw_distance([1.0, 3.0, 2.0, 0.0], [0.0, 1.0, 2.0]) == 6.0
    assert dtw_distance([1.0, 3.0, 2.0, 0.0], [0.0, 1.0, 2.0],
                        DtwParams(window=1)) == 6.0
    assert dtw_distance([0.5], [1.5, 2.5]) == 5.0


def test_dtw_identity_and_symmetry():
    rng = np.random.default_rng(60)
    for _ in range(10):
        a = rng.normal(size=int(rng.integers(2, 30)))
        b = rng.normal(size=int(rng.integers(2, 30)))
        assert dtw_distance(a, a) == 0.0
        assert dtw_distance(a, b) == dtw_distance(b, a)


def test_dtw_window_zero_is_pointwise_cost():
    rng = np.random.default_rng(61)
    a = rng.normal(size=12)
    b = rng.normal(size=12)
    expected = float(((a - b) ** 2).sum())
    assert abs(dtw_distance(a, b, DtwParams(window=0)) - expected) < 1e-12


def test_dtw_window_wider_than_series_is_unconstrained():
    rng = np.random.default_rng(62)
    a = rng.normal(size=9)
    b = rng.normal(size=7)
    assert dtw_distance(a, b, DtwParams(window=100)) == dtw_distance(a, b)


def test_dtw_band_tightening_never_decreases_cost():
    rng = np.random.default_rng(63)
    a = rng.normal(size=10)
    b = rng.normal(size=10)
    costs = [dtw_distance(a, b, DtwParams(window=w)) for w in (0, 1, 2, 5, 9)]
    assert all(x >= y - 1e-12 for x, y in zip(costs, costs[1:]))
    assert costs[-1] == dtw_distance(a, b)


def test_dtw_validation_errors():
    with pytest.raises(ValueError):
        dtw_distance([], [1.0])
    with pytest.raises(ValueError):
        dtw_distance([1.0, 2.0, 3.0], [1.0], DtwParams(window=1))  # infeasible band
    with pytest.raises(ValueError):
        DtwParams(window=-2)


def test_dtw_matches_enumeration_oracle_random():
    rng = np.random.default_rng(64)
    for _ in range(40):
        n = int(rng.integers(1, 7))
        m = int(rng.integers(1, 7))
        a = rng.normal(size=n)
        b = rng.normal(size=m)
        window = None
        if rng.random() < 0.4:
            window = int(rng.integers(abs(n - m), max(n, m) + 1))
        got = dtw_distance(a, b, DtwParams(window=window))
        want = dtw_oracle(a.tolist(), b.tolist(), window)
        assert abs(got - want) < 1e-12


def test_one_nn_classify_tie_picks_lowest_index():
    train = tiny_dataset([
        ([1.0, 1.0], 1),
        ([3.0, 3.0], 0),   # same distance from the query as index 0
    ])
    # query equidistant from both rows under euclidean
    assert one_nn_classify(train, np.array([2.0, 2.0]), euclidean_distance) == 1


def test_one_nn_invariant_under_monotone_metric_transform():
    train = make_wave_dataset(8, 40, seed=65, name="base_TRAIN")
    test = make_wave_dataset(6, 40, seed=66, name="base_TEST")

    def squared(a, b):
        return euclidean_distance(a, b) ** 2

    for ts in test.series:
        assert (one_nn_classify(train, ts, euclidean_distance)
                == one_nn_classify(train, ts, squared))


def test_one_nn_error_self_match_is_zero():
    ds = make_wave_dataset(6, 40, seed=67)
    assert one_nn_error(ds, ds, euclidean_distance) == 0.0
    assert one_nn_error(ds, ds, dtw_metric()) == 0.0


def test_one_nn_error_thread_count_does_not_change_result():
    train = make_wave_dataset(8, 40, seed=68, name="t_TRAIN")
    test = make_wave_dataset(7, 40, seed=69, name="t_TEST")
    serial = one_nn_error(train, test, dtw_metric(), threads=1)
    parallel = one_nn_error(train, test, dtw_metric(), threads=4)
    assert serial == parallel


def test_one_nn_error_separable_data():
    train = make_wave_dataset(10, 50, seed=70, name="s_TRAIN")
    test = make_wave_dataset(8, 50, seed=71, name="s_TEST")
    assert one_nn_error(train, test, euclidean_distance, threads=2) <= 0.1


def test_one_nn_empty_inputs_rejected():
    ds = make_wave_dataset(3, 30, seed=72)
    empty = Dataset([], num_classes=2, series_length=30, name="empty")
    with pytest.raises(ValueError):
        one_nn_classify(empty, ds.series[0], euclidean_distance)
    with pytest.raises(ValueError):
        one_nn_error(ds, empty, euclidean_distance)


def test_worker_count_resolution(monkeypatch):
    assert worker_count(3) == 3
    assert worker_count(0) == 1     # floor at one worker
    monkeypatch.setenv("RPTSC_THREADS", "5")
    assert worker_count() == 5
    assert worker_count(2) == 2     # explicit limit beats the env var
    monkeypatch.delenv("RPTSC_THREADS")
    assert worker_count() == max(1, os.cpu_count() or 1)
