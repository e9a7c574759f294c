"""1-NN classifiers under Euclidean and Dynamic Time Warping distances.

DTW uses squared pointwise cost without a final square root (monotone for
nearest-neighbor purposes, and the convention the archive baselines use), a
two-row rolling DP buffer, and an optional Sakoe-Chiba band of half-width
``window``.  The inner DP is JIT-compiled and releases the GIL, so test
queries can be evaluated on a thread pool.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numba import njit

from .ucr_data import Dataset


@dataclass(frozen=True)
class DtwParams:
    """Band half-width in samples; None means no warping window."""

    window: int | None = None

    def __post_init__(self):
        if self.window is not None and self.window < 0:
            raise ValueError(f"window must be >= 0, got {self.window}")


def worker_count(limit: int | None = None) -> int:
    """Worker cap: explicit limit, else RPTSC_THREADS, else the CPU count."""
    if limit is not None:
        return max(1, limit)
    env = os.environ.get("RPTSC_THREADS")
    if env:
        return max(1, int(env))
    return max(1, os.cpu_count() or 1)


def euclidean_distance(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    d = a - b
    return float(np.sqrt(np.dot(d, d)))


@njit(cache=True, nogil=True)
def _dtw_cost(a, b, window):  # pragma: no cover - exercised through dtw_distance
    n = a.shape[0]
    m = b.shape[0]
    inf = np.inf
    prev = np.full(m + 1, inf)
    curr = np.full(m + 1, inf)
    prev[0] = 0.0
    for i in range(1, n + 1):
        curr[:] = inf
        lo = 1
        hi = m
        if window >= 0:
            lo = max(1, i - window)
            hi = min(m, i + window)
        for j in range(lo, hi + 1):
            d = a[i - 1] - b[j - 1]
            best = prev[j]
            if prev[j - 1] < best:
                best = prev[j - 1]
            if curr[j - 1] < best:
                best = curr[j - 1]
            curr[j] = d * d + best
        prev, curr = curr, prev
    return prev[m]


def dtw_distance(a, b, params: DtwParams = DtwParams()) -> float:
    """Cumulative DTW cost between two series (squared pointwise cost).

    Allowed path moves are (i-1, j), (i, j-1) and (i-1, j-1).  With a window,
    the path is confined to |i - j| <= window (Sakoe-Chiba band), which
    requires |len(a) - len(b)| <= window to be feasible.
    """
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    if a.size == 0 or b.size == 0:
        raise ValueError("dtw_distance requires non-empty series")
    window = -1 if params.window is None else int(params.window)
    if window >= 0 and abs(a.size - b.size) > window:
        raise ValueError(
            f"band of half-width {window} infeasible for lengths {a.size} and {b.size}"
        )
    return float(_dtw_cost(a, b, window))


def dtw_metric(params: DtwParams = DtwParams()) -> Callable:
    """Distance callable with the given band, for use as a 1-NN metric."""

    def metric(a, b) -> float:
        return dtw_distance(a, b, params)

    return metric


def one_nn_classify(train: Dataset, query, metric: Callable) -> int:
    """Label of the nearest training series; ties pick the lowest index."""
    if len(train) == 0:
        raise ValueError("training set is empty")
    values = getattr(query, "values", query)
    distances = np.array([metric(ts.values, values) for ts in train.series])
    return int(train.series[int(distances.argmin())].label)


def one_nn_error(train: Dataset, test: Dataset, metric: Callable,
                 threads: int | None = None) -> float:
    """Misclassification fraction of 1-NN over the test set."""
    if len(test) == 0:
        raise ValueError("test set is empty")
    workers = min(worker_count(threads), len(test))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            predicted = list(
                pool.map(lambda ts: one_nn_classify(train, ts, metric), test.series)
            )
    else:
        predicted = [one_nn_classify(train, ts, metric) for ts in test.series]
    actual = test.labels()
    return float(np.mean(np.asarray(predicted) != actual))
