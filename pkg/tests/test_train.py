import math
from dataclasses import replace

import numpy as np
import pytest

from rptsc.rp_encode import EmbeddingParams
from rptsc.train import (
    GridCell,
    RunReport,
    TrainConfig,
    _cell_seed,
    default_grid,
    evaluate,
    grid_evaluate,
    grid_select,
    rank_table,
    select_cell,
    train_model,
    write_rank_csv,
)

from .conftest import make_wave_dataset

FAST = dict(batch_size=5, epochs=4, validation_fraction=0.25)


def fast_config(**overrides):
    merged = {**FAST, **overrides}
    return TrainConfig(**merged)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(batch_size=0),
        dict(epochs=0),
        dict(input_size=30),
        dict(seed=-1),
        dict(validation_fraction=0.5),
        dict(validation_fraction=-0.1),
    ],
)
def test_train_config_validation(kwargs):
    with pytest.raises(ValueError):
        TrainConfig(**kwargs)


def test_train_config_accepts_zero_validation():
    assert TrainConfig(validation_fraction=0.0).validation_fraction == 0.0


def test_train_model_report_bookkeeping():
    train = make_wave_dataset(10, 60, seed=80, name="bk_TRAIN")
    config = fast_config(seed=2)
    net, report = train_model(train, config)

    assert report.epochs_run == config.epochs
    assert len(report.train_acc) == config.epochs
    assert len(report.val_loss) == config.epochs
    assert 1 <= report.best_epoch <= config.epochs
    # 20 series, 25% stratified validation leaves 14 training series
    n_train = 14
    per_epoch = math.ceil(n_train / config.batch_size)
    assert report.total_steps == config.epochs * per_epoch
    assert report.wall_clock_s > 0.0
    assert net.training is False
    assert 0.0 <= report.val_error_at_best <= 1.0


def test_train_model_loss_decreases_on_separable_data():
    train = make_wave_dataset(10, 60, seed=81, name="sep_TRAIN")
    _, report = train_model(train, fast_config(epochs=12, seed=0))
    assert report.train_loss[-1] < report.train_loss[0]
    assert report.train_acc[-1] >= 0.9


def test_train_model_without_validation():
    train = make_wave_dataset(6, 60, seed=82, name="noval_TRAIN")
    net, report = train_model(train, fast_config(validation_fraction=0.0, seed=1))
    assert report.best_epoch == 0
    assert all(math.isnan(v) for v in report.val_loss)
    with pytest.raises(ValueError):
        report.val_error_at_best
    assert net.predict(np.zeros((1, 1, 28, 28))).shape == (1,)


def test_train_model_deterministic_per_seed():
    train = make_wave_dataset(8, 60, seed=83, name="det_TRAIN")
    config = fast_config(seed=9)
    net_a, report_a = train_model(train, config)
    net_b, report_b = train_model(train, config)
    assert report_a.train_loss == report_b.train_loss
    assert report_a.val_loss == report_b.val_loss
    for pa, pb in zip(net_a.parameters(), net_b.parameters()):
        np.testing.assert_array_equal(pa, pb)

    _, report_c = train_model(train, replace(config, seed=10))
    assert report_a.train_loss != report_c.train_loss


def test_best_epoch_weights_are_restored():
    train = make_wave_dataset(8, 60, seed=84, name="best_TRAIN")
    config = fast_config(epochs=8, seed=4)
    net, report = train_model(train, config)
    # rerun for exactly best_epoch epochs: parameters must agree bit for bit
    net_cut, _ = train_model(train, replace(config, epochs=report.best_epoch))
    for pa, pb in zip(net.parameters(), net_cut.parameters()):
        np.testing.assert_array_equal(pa, pb)


def test_evaluate_on_memorized_training_data():
    train = make_wave_dataset(8, 60, seed=85, name="mem_TRAIN")
    config = fast_config(epochs=25, validation_fraction=0.0, seed=0)
    net, _ = train_model(train, config)
    assert evaluate(net, train, config) <= 0.15


def test_run_report_csv_shape(tmp_path):
    config = fast_config()
    report = RunReport(config=config, seed=3)
    report.train_loss = [0.9, 0.5]
    report.train_acc = [0.5, 0.8]
    report.val_loss = [1.0, float("nan")]
    report.val_acc = [0.4, float("nan")]
    report.best_epoch = 1
    report.total_steps = 8
    report.test_error = 0.25
    report.wall_clock_s = 123.0
    path = tmp_path / "report.csv"
    report.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "epoch,train_loss,train_acc,val_loss,val_acc"
    assert lines[1] == "1,0.900000,0.500000,1.000000,0.400000"
    assert lines[2] == "2,0.500000,0.800000,,"       # NaN prints as empty
    assert lines[3] == "# summary,seed=3,best_epoch=1,steps=8,test_error=0.250000"
    assert "123" not in path.read_text()             # wall clock never serialized


def test_default_grid_is_the_eight_cell_sweep():
    base = fast_config()
    grid = default_grid(base)
    combos = [(c.batch_size, c.epochs) for c in grid]
    assert combos == [(5, 50), (5, 250), (5, 1000), (5, 2000),
                      (20, 50), (20, 250), (20, 1000), (20, 2000)]
    assert all(c.seed == base.seed for c in grid)


def test_cell_seed_injective_over_grid():
    seen = {_cell_seed(seed, index) for seed in range(6) for index in range(8)}
    assert len(seen) == 48


def test_grid_evaluate_trains_each_cell():
    train = make_wave_dataset(8, 60, seed=86, name="grid_TRAIN")
    base = fast_config(epochs=2)
    grid = [replace(base, batch_size=4), replace(base, batch_size=8)]
    cells = grid_evaluate(train, grid, threads=1)
    assert [c.config.batch_size for c in cells] == [4, 8]
    for cell in cells:
        assert cell.error is None
        assert 0.0 <= cell.val_error <= 1.0
        assert cell.best_epoch >= 1
        assert cell.config in grid  # reseeding must not leak into the result


def test_grid_evaluate_thread_count_does_not_change_results():
    train = make_wave_dataset(6, 60, seed=87, name="gridt_TRAIN")
    base = fast_config(epochs=2)
    grid = [replace(base, batch_size=4), replace(base, batch_size=8)]
    serial = grid_evaluate(train, grid, threads=1)
    threaded = grid_evaluate(train, grid, threads=2)
    assert [c.val_error for c in serial] == [c.val_error for c in threaded]
    assert [c.val_loss for c in serial] == [c.val_loss for c in threaded]


def test_grid_requires_validation_split():
    train = make_wave_dataset(6, 60, seed=88, name="gridv_TRAIN")
    grid = [fast_config(validation_fraction=0.0)]
    cells = grid_evaluate(train, grid, threads=1)
    assert cells[0].error is not None
    with pytest.raises(RuntimeError):
        select_cell(cells)
    with pytest.raises(RuntimeError):
        grid_select(train, grid, threads=1)
    with pytest.raises(ValueError):
        grid_evaluate(train, [], threads=1)


def test_select_cell_tie_breaking():
    def cell(err, epochs, batch):
        return GridCell(fast_config(epochs=epochs, batch_size=batch),
                        err, err, 1, None)

    # lower error wins outright
    best = select_cell([cell(0.2, 50, 5), cell(0.1, 2000, 20)])
    assert best.config.epochs == 2000
    # tie on error: fewer epochs
    best = select_cell([cell(0.1, 250, 5), cell(0.1, 50, 20)])
    assert best.config.epochs == 50
    # tie on error and epochs: smaller batch
    best = select_cell([cell(0.1, 50, 20), cell(0.1, 50, 5)])
    assert best.config.batch_size == 5


def test_rank_table_dense_ranking_hand_case():
    results = {
        "a": {"d1": 0.1, "d2": 0.2},
        "b": {"d1": 0.1, "d2": 0.3},
        "c": {"d1": 0.4, "d2": 0.1},
    }
    summary = rank_table(results)
    assert summary.wins == {"a": 1, "b": 1, "c": 1}
    assert summary.average_rank == {"a": 1.5, "b": 2.0, "c": 1.5}


def test_rank_table_handles_missing_entries():
    results = {
        "a": {"d1": 0.1},
        "b": {"d1": 0.2, "d2": 0.0},
    }
    summary = rank_table(results)
    assert summary.wins == {"a": 1, "b": 1}
    assert summary.average_rank == {"a": 1.0, "b": 1.5}


def test_rank_table_rejects_empty_input():
    with pytest.raises(ValueError):
        rank_table({})
    with pytest.raises(ValueError):
        rank_table({"a": {}})


def test_write_rank_csv_golden(tmp_path):
    results = {
        "a": {"d1": 0.1, "d2": 0.2},
        "b": {"d1": 0.1, "d2": 0.3},
        "c": {"d1": 0.4, "d2": 0.1},
    }
    path = tmp_path / "ranks.csv"
    write_rank_csv(results, path)
    assert path.read_text() == (
        "dataset,a,b,c\n"
        "d1,1,1,2\n"
        "d2,2,3,1\n"
        "wins,1,1,1\n"
        "average_rank,1.5000,2.0000,1.5000\n"
    )


def test_train_config_carries_embedding():
    cfg = TrainConfig(embedding=EmbeddingParams(m=2, tau=3))
    assert cfg.embedding.m == 2
    assert cfg.embedding.tau == 3
