"""UCR-format dataset parsing, label remapping, z-normalization and splits.

Dataset files are plain text, one labeled series per line: the first field is
the class label, the remaining fields are the samples.  Both comma-delimited
and whitespace-delimited files are accepted (auto-detected per file).  Raw
labels may be arbitrary numerals (negative, non-contiguous); they are remapped
to 0..c-1 by ascending numeric order so the mapping does not depend on row
order.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


class UcrFormatError(ValueError):
    """Raised when a dataset file violates the expected text format."""


@dataclass
class TimeSeries:
    """One labeled univariate series."""

    values: np.ndarray  # float64, shape (l,)
    label: int          # remapped class index in 0..c-1
    raw_label: str      # label token exactly as read from the file


@dataclass
class Dataset:
    """A named collection of equal-length labeled series."""

    series: list[TimeSeries]
    num_classes: int
    series_length: int
    name: str

    def __len__(self) -> int:
        return len(self.series)

    def labels(self) -> np.ndarray:
        return np.array([ts.label for ts in self.series], dtype=np.int64)

    def subset(self, indices, suffix: str = "") -> "Dataset":
        """New dataset sharing the selected series (classes may be missing)."""
        return Dataset(
            series=[self.series[i] for i in indices],
            num_classes=self.num_classes,
            series_length=self.series_length,
            name=self.name + suffix,
        )


def _split_line(line: str, comma: bool) -> list[str]:
    if comma:
        return [tok.strip() for tok in line.split(",")]
    return line.split()


def parse_ucr_file(content: str, name: str) -> Dataset:
    """Parse UCR-style text into a Dataset.

    The delimiter (comma vs. runs of whitespace) is detected from the first
    non-empty line.  All format violations are reported with the 1-based line
    number of the offending record.
    """
    records: list[tuple[int, str]] = []
    for lineno, line in enumerate(content.splitlines(), start=1):
        if line.strip():
            records.append((lineno, line.strip()))
    if not records:
        raise UcrFormatError(f"{name}: empty input, no data lines found")

    comma = "," in records[0][1]
    raw_labels: list[str] = []
    rows: list[np.ndarray] = []
    length: int | None = None
    for lineno, line in records:
        fields = _split_line(line, comma)
        if len(fields) < 3:
            raise UcrFormatError(
                f"{name}:{lineno}: record needs a label and at least 2 samples, "
                f"got {len(fields)} fields"
            )
        values = np.empty(len(fields) - 1, dtype=np.float64)
        for k, tok in enumerate(fields):
            try:
                v = float(tok)
            except ValueError:
                raise UcrFormatError(
                    f"{name}:{lineno}: non-numeric field {k + 1}: {tok!r}"
                ) from None
            if k == 0:
                continue
            if not math.isfinite(v):
                raise UcrFormatError(
                    f"{name}:{lineno}: non-finite sample in field {k + 1}: {tok!r}"
                )
            values[k - 1] = v
        if length is None:
            length = values.size
        elif values.size != length:
            raise UcrFormatError(
                f"{name}:{lineno}: inconsistent record length, "
                f"expected {length} samples, got {values.size}"
            )
        raw_labels.append(fields[0])
        rows.append(values)

    # Remap labels to 0..c-1 by ascending numeric value of the distinct tokens.
    distinct = sorted({float(tok) for tok in raw_labels})
    if len(distinct) < 2:
        raise UcrFormatError(
            f"{name}: fewer than 2 distinct class labels (found {len(distinct)})"
        )
    label_of = {v: i for i, v in enumerate(distinct)}

    series = [
        TimeSeries(values=vals, label=label_of[float(tok)], raw_label=tok)
        for vals, tok in zip(rows, raw_labels)
    ]
    return Dataset(
        series=series,
        num_classes=len(distinct),
        series_length=int(length),
        name=name,
    )


def load_ucr_file(path) -> Dataset:
    """Parse a dataset file from disk; its name is the file's stem."""
    with open(path, "r") as fh:
        content = fh.read()
    name = os.path.splitext(os.path.basename(os.fspath(path)))[0]
    return parse_ucr_file(content, name)


def serialize_ucr(dataset: Dataset) -> str:
    """Write a dataset back to comma-delimited text with raw labels preserved.

    Values are printed with shortest round-trip float formatting, so
    ``parse_ucr_file(serialize_ucr(d), d.name)`` reproduces ``d`` exactly.
    """
    lines = []
    for ts in dataset.series:
        lines.append(",".join([ts.raw_label] + [repr(float(v)) for v in ts.values]))
    return "\n".join(lines) + "\n"


def znormalize(series: TimeSeries) -> TimeSeries:
    """Standardize to mean 0, population standard deviation 1.

    Inputs with standard deviation below 1e-12 come back as all zeros.
    """
    if series.values.size < 2:
        raise ValueError("znormalize requires at least 2 samples")
    mean = float(series.values.mean())
    std = float(series.values.std())  # population (ddof=0)
    if std < 1e-12:
        values = np.zeros_like(series.values)
    else:
        values = (series.values - mean) / std
    return TimeSeries(values=values, label=series.label, raw_label=series.raw_label)


class ValidationSplit(NamedTuple):
    train: Dataset
    validation: Dataset
    train_indices: tuple[int, ...]
    validation_indices: tuple[int, ...]
    missing_classes: tuple[int, ...]  # classes absent from the validation part


def split_validation(dataset: Dataset, fraction: float, seed: int) -> ValidationSplit:
    """Deterministic stratified split into (train, validation).

    Per class, ceil(fraction * class_count) samples go to validation, capped at
    class_count - 1 so no class ever leaves training entirely.  Single-sample
    classes therefore stay in training and are reported in
    ``missing_classes``.
    """
    if not 0.0 < fraction < 0.5:
        raise ValueError(f"fraction must be in (0, 0.5), got {fraction}")
    rng = np.random.default_rng(seed)
    labels = dataset.labels()
    val_idx: list[int] = []
    missing: list[int] = []
    for cls in range(dataset.num_classes):
        members = np.flatnonzero(labels == cls)
        n = members.size
        if n == 0:
            missing.append(cls)
            continue
        take = min(math.ceil(fraction * n), n - 1)
        if take == 0:
            missing.append(cls)
            continue
        chosen = members[rng.permutation(n)[:take]]
        val_idx.extend(int(i) for i in chosen)
    val_set = set(val_idx)
    train_idx = [i for i in range(len(dataset)) if i not in val_set]
    val_idx = sorted(val_idx)
    return ValidationSplit(
        train=dataset.subset(train_idx, "[train]"),
        validation=dataset.subset(val_idx, "[val]"),
        train_indices=tuple(train_idx),
        validation_indices=tuple(val_idx),
        missing_classes=tuple(missing),
    )
