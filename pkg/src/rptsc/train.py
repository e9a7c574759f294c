"""Training orchestration: encoding, mini-batch loops, grid search, ranking.

A run encodes every series to an image once up front, trains for the
configured number of epochs with seeded shuffling, and keeps the parameter
snapshot with the lowest validation loss.  Everything is deterministic given
(config, seed, dataset): repeated runs reproduce the same numbers.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Mapping, NamedTuple

import numpy as np

from .baseline import worker_count
from .cnn import Network, build_two_stage, make_optimizer, softmax_xent
from .cnn.network import INPUT_SIZES
from .rp_encode import EmbeddingParams, encode_dataset
from .ucr_data import Dataset, split_validation

GRID_BATCH_SIZES = (5, 20)
GRID_EPOCHS = (50, 250, 1000, 2000)

_EVAL_BATCH = 256


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 20
    epochs: int = 250
    optimizer: str = "adam"
    learning_rate: float = 1e-3
    input_size: int = 28
    kernel_size: int = 3
    channels: int = 32
    hidden: int = 128
    seed: int = 0
    validation_fraction: float = 0.2
    embedding: EmbeddingParams = field(default_factory=EmbeddingParams)
    norm: str = "l2"
    invert: bool = False
    znorm: bool = False
    epsilon: float | None = None
    global_scale: bool = False

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.input_size not in INPUT_SIZES:
            raise ValueError(
                f"input_size must be one of {INPUT_SIZES}, got {self.input_size}"
            )
        if self.seed < 0:
            raise ValueError(f"seed must be >= 0, got {self.seed}")
        if not 0.0 <= self.validation_fraction < 0.5:
            raise ValueError(
                f"validation_fraction must be in [0, 0.5), got {self.validation_fraction}"
            )


@dataclass
class RunReport:
    config: TrainConfig
    seed: int
    train_loss: list[float] = field(default_factory=list)
    train_acc: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    val_acc: list[float] = field(default_factory=list)
    best_epoch: int = 0       # 1-based; 0 means "no validation, final weights kept"
    total_steps: int = 0
    test_error: float | None = None
    wall_clock_s: float = 0.0

    @property
    def epochs_run(self) -> int:
        return len(self.train_loss)

    @property
    def val_error_at_best(self) -> float:
        if self.best_epoch == 0:
            raise ValueError("run had no validation split")
        return 1.0 - self.val_acc[self.best_epoch - 1]

    def to_csv(self, path) -> None:
        """One row per epoch plus a '#'-prefixed summary line.

        Wall-clock time is deliberately left out so identical runs produce
        byte-identical files.
        """
        lines = ["epoch,train_loss,train_acc,val_loss,val_acc"]
        for i in range(self.epochs_run):
            vl = "" if math.isnan(self.val_loss[i]) else f"{self.val_loss[i]:.6f}"
            va = "" if math.isnan(self.val_acc[i]) else f"{self.val_acc[i]:.6f}"
            lines.append(
                f"{i + 1},{self.train_loss[i]:.6f},{self.train_acc[i]:.6f},{vl},{va}"
            )
        test = "" if self.test_error is None else f"{self.test_error:.6f}"
        lines.append(
            f"# summary,seed={self.seed},best_epoch={self.best_epoch},"
            f"steps={self.total_steps},test_error={test}"
        )
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")


def _encode_config(dataset: Dataset, config: TrainConfig):
    return encode_dataset(
        dataset,
        config.embedding,
        norm=config.norm,
        size=config.input_size,
        invert=config.invert,
        epsilon=config.epsilon,
        znorm=config.znorm,
        global_scale=config.global_scale,
    )


def _metrics(net: Network, images: np.ndarray, labels: np.ndarray) -> tuple[float, float]:
    """Eval-mode mean loss and accuracy over an image stack."""
    net.set_mode("eval")
    total_loss = 0.0
    correct = 0
    n = images.shape[0]
    for start in range(0, n, _EVAL_BATCH):
        xb = images[start : start + _EVAL_BATCH]
        yb = labels[start : start + _EVAL_BATCH]
        logits = net.forward(xb)
        loss, _ = softmax_xent(logits, yb)
        total_loss += loss * xb.shape[0]
        correct += int((logits.argmax(axis=1) == yb).sum())
    return total_loss / n, correct / n


def train_model(train_set: Dataset, config: TrainConfig) -> tuple[Network, RunReport]:
    """Train the 2-stage classifier on an encoded dataset.

    Returns the network holding the best-validation-loss snapshot (or the
    final weights when the validation split is empty) plus the filled report.
    """
    images, labels = _encode_config(train_set, config)

    if config.validation_fraction > 0.0:
        split = split_validation(train_set, config.validation_fraction, config.seed)
        train_idx = np.array(split.train_indices, dtype=np.int64)
        val_idx = np.array(split.validation_indices, dtype=np.int64)
    else:
        train_idx = np.arange(len(train_set), dtype=np.int64)
        val_idx = np.array([], dtype=np.int64)
    x_train, y_train = images[train_idx], labels[train_idx]
    x_val, y_val = images[val_idx], labels[val_idx]
    has_val = val_idx.size > 0

    net = build_two_stage(
        input_size=config.input_size,
        num_classes=train_set.num_classes,
        kernel_size=config.kernel_size,
        channels=config.channels,
        hidden=config.hidden,
        seed=config.seed,
    )
    optimizer = make_optimizer(config.optimizer, net.parameters(), config.learning_rate)
    shuffle_rng = np.random.default_rng([config.seed, 1])

    report = RunReport(config=config, seed=config.seed)
    best_loss = np.inf
    best_state = None
    n = x_train.shape[0]
    started = time.perf_counter()
    for epoch in range(1, config.epochs + 1):
        net.set_mode("train")
        perm = shuffle_rng.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = perm[start : start + config.batch_size]
            net.loss_and_grads(x_train[idx], y_train[idx])
            optimizer.step(net.gradients())
            report.total_steps += 1

        train_loss, train_acc = _metrics(net, x_train, y_train)
        report.train_loss.append(train_loss)
        report.train_acc.append(train_acc)
        if has_val:
            val_loss, val_acc = _metrics(net, x_val, y_val)
            report.val_loss.append(val_loss)
            report.val_acc.append(val_acc)
            if val_loss < best_loss:
                best_loss = val_loss
                best_state = net.get_state()
                report.best_epoch = epoch
        else:
            report.val_loss.append(float("nan"))
            report.val_acc.append(float("nan"))

    if best_state is not None:
        net.set_state(best_state)
    report.wall_clock_s = time.perf_counter() - started
    net.set_mode("eval")
    return net, report


def evaluate(net: Network, test_set: Dataset, config: TrainConfig) -> float:
    """Test error rate of eval-mode predictions."""
    images, labels = _encode_config(test_set, config)
    wrong = 0
    for start in range(0, images.shape[0], _EVAL_BATCH):
        pred = net.predict(images[start : start + _EVAL_BATCH])
        wrong += int((pred != labels[start : start + _EVAL_BATCH]).sum())
    return wrong / images.shape[0]


def default_grid(base: TrainConfig) -> list[TrainConfig]:
    """The batch/epoch selection grid: {5, 20} x {50, 250, 1000, 2000}."""
    return [
        replace(base, batch_size=b, epochs=e)
        for b in GRID_BATCH_SIZES
        for e in GRID_EPOCHS
    ]


class GridCell(NamedTuple):
    config: TrainConfig
    val_error: float
    val_loss: float
    best_epoch: int
    error: str | None  # failure message when the cell could not be trained


def _cell_seed(seed: int, index: int) -> int:
    # distinct deterministic stream per (seed, cell index)
    return seed * 1009 + index


def grid_evaluate(train_set: Dataset, grid: list[TrainConfig],
                  threads: int | None = None) -> list[GridCell]:
    """Train every grid cell and collect its validation score."""
    if not grid:
        raise ValueError("grid is empty")

    def run(item) -> GridCell:
        index, config = item
        if config.validation_fraction <= 0.0:
            return GridCell(config, math.nan, math.nan, 0,
                            "grid selection needs a validation split")
        cell_config = replace(config, seed=_cell_seed(config.seed, index))
        try:
            _, report = train_model(train_set, cell_config)
        except ValueError as exc:
            return GridCell(config, math.nan, math.nan, 0, str(exc))
        return GridCell(
            config,
            report.val_error_at_best,
            min(report.val_loss),
            report.best_epoch,
            None,
        )

    workers = min(worker_count(threads), len(grid))
    items = list(enumerate(grid))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run, items))
    return [run(item) for item in items]


def select_cell(cells: list[GridCell]) -> GridCell:
    """Cell with the lowest validation error; ties prefer fewer epochs,
    then smaller batches."""
    usable = [c for c in cells if c.error is None]
    if not usable:
        details = "; ".join(c.error or "?" for c in cells)
        raise RuntimeError(f"every grid cell failed: {details}")
    return min(
        usable,
        key=lambda c: (c.val_error, c.config.epochs, c.config.batch_size),
    )


def grid_select(train_set: Dataset, grid: list[TrainConfig],
                threads: int | None = None) -> TrainConfig:
    """Train every cell and return the winning config (see select_cell)."""
    return select_cell(grid_evaluate(train_set, grid, threads=threads)).config


class RankSummary(NamedTuple):
    wins: dict[str, int]
    average_rank: dict[str, float]


def _table_axes(results: Mapping[str, Mapping[str, float]]):
    if not results:
        raise ValueError("results matrix is empty")
    algorithms = list(results)
    datasets: list[str] = []
    for algo in algorithms:
        for ds in results[algo]:
            if ds not in datasets:
                datasets.append(ds)
    if not datasets:
        raise ValueError("results matrix has no dataset entries")
    return algorithms, datasets


def _dataset_ranks(results: Mapping[str, Mapping[str, float]],
                   algorithms: list[str], ds: str):
    """Dense rank positions for one dataset column: ascending error, tied
    errors share a rank, the next distinct error takes the next integer.
    Second element flags membership in the shared minimum."""
    entries = [(algo, results[algo][ds]) for algo in algorithms
               if ds in results[algo]]
    entries.sort(key=lambda pair: pair[1])
    lowest = entries[0][1]
    ranks: dict[str, tuple[float, bool]] = {}
    rank = 1
    i = 0
    while i < len(entries):
        j = i
        while j < len(entries) and entries[j][1] == entries[i][1]:
            j += 1
        for algo, err in entries[i:j]:
            ranks[algo] = (float(rank), err == lowest)
        rank += 1
        i = j
    return ranks


def rank_table(results: Mapping[str, Mapping[str, float]]) -> RankSummary:
    """Wins and average rank per algorithm over a results matrix.

    ``results`` maps algorithm -> dataset -> error rate; missing entries are
    simply absent.  Per dataset, algorithms are ranked by ascending error
    using dense ranking (tied values share a rank, the next distinct value
    takes the next integer); every algorithm matching the dataset minimum
    counts a win.  Average rank for an algorithm is taken over the datasets
    where it has an entry, so algorithms with missing cells are still
    comparable.
    """
    algorithms, datasets = _table_axes(results)
    wins = {algo: 0 for algo in algorithms}
    collected: dict[str, list[float]] = {algo: [] for algo in algorithms}
    for ds in datasets:
        for algo, (rank, is_min) in _dataset_ranks(results, algorithms, ds).items():
            collected[algo].append(rank)
            if is_min:
                wins[algo] += 1
    average_rank = {
        algo: (sum(r) / len(r) if r else math.nan)
        for algo, r in collected.items()
    }
    return RankSummary(wins=wins, average_rank=average_rank)


def write_rank_csv(results: Mapping[str, Mapping[str, float]], path) -> None:
    """Rank table as CSV: one dataset per row, algorithms as columns,
    followed by wins and average-rank rows."""
    summary = rank_table(results)
    algorithms, datasets = _table_axes(results)
    per_dataset = {
        ds: _dataset_ranks(results, algorithms, ds) for ds in datasets
    }

    lines = ["dataset," + ",".join(algorithms)]
    for ds in datasets:
        cells = []
        for algo in algorithms:
            entry = per_dataset[ds].get(algo)
            cells.append("" if entry is None else f"{entry[0]:g}")
        lines.append(ds + "," + ",".join(cells))
    lines.append("wins," + ",".join(str(summary.wins[a]) for a in algorithms))
    lines.append(
        "average_rank,"
        + ",".join(f"{summary.average_rank[a]:.4f}" for a in algorithms)
    )
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
