"""Shared fixtures: synthetic datasets and optional UCR archive discovery.

Real archive files are looked up under RPTSC_UCR_DIR (default: data/ucr at
the repo root).  Tests that need them skip with a clear message when the
files are absent, so the suite stays runnable offline.
"""

from __future__ import annotations

import os

import numpy as np
import pytest

from rptsc.ucr_data import Dataset, TimeSeries, load_ucr_file

REPO_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))

_SPLIT_PATTERNS = (
    "{name}_{split}",
    "{name}_{split}.txt",
    "{name}_{split}.tsv",
    "{name}_{split}.csv",
    os.path.join("{name}", "{name}_{split}"),
    os.path.join("{name}", "{name}_{split}.txt"),
    os.path.join("{name}", "{name}_{split}.tsv"),
)


def ucr_dir() -> str:
    return os.environ.get("RPTSC_UCR_DIR", os.path.join(REPO_ROOT, "data", "ucr"))


def find_ucr_split(name: str, split: str) -> str | None:
    base = ucr_dir()
    for pattern in _SPLIT_PATTERNS:
        path = os.path.join(base, pattern.format(name=name, split=split))
        if os.path.isfile(path):
            return path
    return None


def load_ucr_pair(name: str) -> tuple[Dataset, Dataset]:
    """TRAIN/TEST pair for an archive dataset, or skip the calling test."""
    train_path = find_ucr_split(name, "TRAIN")
    test_path = find_ucr_split(name, "TEST")
    if train_path is None or test_path is None:
        pytest.skip(
            f"UCR dataset {name!r} not found under {ucr_dir()!r} "
            "(set RPTSC_UCR_DIR to an archive checkout)"
        )
    return load_ucr_file(train_path), load_ucr_file(test_path)


def make_wave_dataset(n_per_class: int, length: int, seed: int,
                      name: str = "synth",
                      freqs=(0.05, 0.12), noise: float = 0.15) -> Dataset:
    """Sinusoids of distinct frequencies with phase jitter and noise: easy
    to classify, hard to memorize exactly."""
    rng = np.random.default_rng(seed)
    t = np.arange(length)
    series = []
    for label, freq in enumerate(freqs):
        for _ in range(n_per_class):
            phase = rng.uniform(0.0, 2.0 * np.pi)
            values = np.sin(2.0 * np.pi * freq * t + phase)
            values = values + rng.normal(0.0, noise, size=length)
            series.append(
                TimeSeries(values=values, label=label, raw_label=str(label + 1))
            )
    order = rng.permutation(len(series))
    return Dataset(
        series=[series[i] for i in order],
        num_classes=len(freqs),
        series_length=length,
        name=name,
    )


@pytest.fixture
def wave_train() -> Dataset:
    return make_wave_dataset(12, 60, seed=0, name="wave_TRAIN")


@pytest.fixture
def wave_test() -> Dataset:
    return make_wave_dataset(10, 60, seed=1, name="wave_TEST")


def write_ucr_text(dataset: Dataset, path) -> None:
    from rptsc.ucr_data import serialize_ucr

    with open(path, "w") as fh:
        fh.write(serialize_ucr(dataset))
