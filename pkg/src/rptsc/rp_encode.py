"""Recurrence-image encoding of time series.

A scalar series is lifted into an m-dimensional state trajectory by delay
embedding (state i is ``(x_i, x_{i+tau}, ..., x_{i+(m-1)tau})``), the K x K
matrix of pairwise state distances is computed, and the result is rendered as
a gray-level image.  Optionally the matrix can be binarized against a
threshold distance before rendering; by default the raw distances are kept so
no information is lost to binarization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from PIL import Image

from .ucr_data import Dataset, TimeSeries, znormalize

NORMS = ("l1", "l2", "linf")


@dataclass(frozen=True)
class EmbeddingParams:
    """Delay-embedding parameters: dimension m and delay tau (in samples)."""

    m: int = 3
    tau: int = 4

    def __post_init__(self):
        if self.m < 1:
            raise ValueError(f"embedding dimension m must be >= 1, got {self.m}")
        if self.tau < 1:
            raise ValueError(f"delay tau must be >= 1, got {self.tau}")

    def min_length(self) -> int:
        """Shortest series that yields at least 2 states."""
        return (self.m - 1) * self.tau + 2


def _series_values(series) -> np.ndarray:
    values = getattr(series, "values", series)
    return np.asarray(values, dtype=np.float64)


def embed(series, params: EmbeddingParams) -> np.ndarray:
    """Delay-embed a series into a (K, m) trajectory, K = l - (m-1)*tau.

    ``series`` may be a TimeSeries or a plain 1-D array.
    """
    x = _series_values(series)
    l = x.size
    k = l - (params.m - 1) * params.tau
    if k < 2:
        raise ValueError(
            f"series of length {l} too short for (m={params.m}, tau={params.tau}); "
            f"need at least {params.min_length()} samples"
        )
    idx = np.arange(k)[:, None] + np.arange(params.m)[None, :] * params.tau
    return x[idx]


def recurrence_matrix(traj: np.ndarray, norm: str = "l2") -> np.ndarray:
    """Pairwise state-distance matrix under the chosen norm.

    The result is exactly symmetric with an exactly zero diagonal, because the
    elementwise operations act on an antisymmetric difference tensor.
    """
    traj = np.asarray(traj, dtype=np.float64)
    if traj.ndim != 2 or traj.shape[0] < 2:
        raise ValueError("trajectory must be a (K, m) matrix with K >= 2")
    norm = norm.lower()
    diff = traj[:, None, :] - traj[None, :, :]
    if norm == "l1":
        return np.abs(diff).sum(axis=-1)
    if norm == "l2":
        return np.sqrt((diff * diff).sum(axis=-1))
    if norm == "linf":
        return np.abs(diff).max(axis=-1)
    raise ValueError(f"unknown norm {norm!r}, expected one of {NORMS}")


def threshold(r: np.ndarray, epsilon: float) -> np.ndarray:
    """Binarize distances: 1 where distance <= epsilon, else 0.

    This is the Heaviside step of (epsilon - distance) with the unit-at-zero
    convention, so a distance exactly equal to epsilon counts as recurrent.
    """
    if epsilon < 0:
        raise ValueError(f"epsilon must be >= 0, got {epsilon}")
    return np.where(r <= epsilon, 1.0, 0.0)


def to_gray_image(r: np.ndarray) -> np.ndarray:
    """Min-max scale a distance matrix into [0, 1] (per plot).

    A constant matrix maps to all zeros.  Bright pixels mean large state
    distance; use ``1 - to_gray_image(r)`` for recurrence-is-bright polarity.
    """
    r = np.asarray(r, dtype=np.float64)
    lo = r.min()
    hi = r.max()
    if hi - lo <= 0.0:
        return np.zeros_like(r)
    return (r - lo) / (hi - lo)


def resize(img: np.ndarray, target: int) -> np.ndarray:
    """Bilinear resize to target x target with half-pixel-centered mapping.

    Output pixel (r, c) samples the source at ((r + 0.5) * H / target - 0.5,
    (c + 0.5) * W / target - 0.5), clamping at the edges.  A target equal to
    the source size reproduces the input exactly.
    """
    img = np.asarray(img, dtype=np.float64)
    if target < 1:
        raise ValueError(f"target size must be >= 1, got {target}")
    h, w = img.shape

    def axis_coords(src: int, dst: int):
        s = (np.arange(dst) + 0.5) * (src / dst) - 0.5
        i0 = np.floor(s).astype(np.int64)
        frac = s - i0
        lo = np.clip(i0, 0, src - 1)
        hi = np.clip(i0 + 1, 0, src - 1)
        return lo, hi, frac

    y0, y1, fy = axis_coords(h, target)
    x0, x1, fx = axis_coords(w, target)
    fy = fy[:, None]
    fx = fx[None, :]
    out = (
        img[np.ix_(y0, x0)] * (1.0 - fy) * (1.0 - fx)
        + img[np.ix_(y0, x1)] * (1.0 - fy) * fx
        + img[np.ix_(y1, x0)] * fy * (1.0 - fx)
        + img[np.ix_(y1, x1)] * fy * fx
    )
    return out


def write_png(img: np.ndarray, path) -> None:
    """Write an image in [0, 1] as an 8-bit grayscale PNG.

    Pixel bytes are round(255 * value) with round-half-up.
    """
    img = np.asarray(img, dtype=np.float64)
    quantized = np.floor(255.0 * img + 0.5)
    data = np.clip(quantized, 0, 255).astype(np.uint8)
    try:
        Image.fromarray(data, mode="L").save(path, format="PNG")
    except OSError as exc:
        raise OSError(f"cannot write PNG to {path}: {exc}") from exc


def encode_series(
    series,
    params: EmbeddingParams,
    *,
    norm: str = "l2",
    size: int | None = None,
    invert: bool = False,
    epsilon: float | None = None,
    znorm: bool = False,
) -> np.ndarray:
    """Full series-to-image pipeline for a single series."""
    if znorm and isinstance(series, TimeSeries):
        series = znormalize(series)
    r = recurrence_matrix(embed(series, params), norm)
    if epsilon is not None:
        r = threshold(r, epsilon)
    img = to_gray_image(r)
    if invert:
        img = 1.0 - img
    if size is not None:
        img = resize(img, size)
    return img


def encode_dataset(
    dataset: Dataset,
    params: EmbeddingParams,
    *,
    norm: str = "l2",
    size: int | None = None,
    invert: bool = False,
    epsilon: float | None = None,
    znorm: bool = False,
    global_scale: bool = False,
) -> tuple[np.ndarray, np.ndarray]:
    """Encode every series of a dataset into a (N, 1, S, S) image stack.

    With ``global_scale`` the min-max normalization uses the range of the
    whole dataset's distance matrices instead of each plot's own range.
    Returns (images, labels).
    """
    matrices = []
    for i, ts in enumerate(dataset.series):
        try:
            src = znormalize(ts) if znorm else ts
            r = recurrence_matrix(embed(src, params), norm)
        except ValueError as exc:
            raise ValueError(f"series {i} of {dataset.name!r}: {exc}") from exc
        if epsilon is not None:
            r = threshold(r, epsilon)
        matrices.append(r)

    if global_scale:
        lo = min(float(r.min()) for r in matrices)
        hi = max(float(r.max()) for r in matrices)
        span = hi - lo
        if span <= 0.0:
            images = [np.zeros_like(r) for r in matrices]
        else:
            images = [(r - lo) / span for r in matrices]
    else:
        images = [to_gray_image(r) for r in matrices]

    if invert:
        images = [1.0 - img for img in images]
    if size is not None:
        images = [resize(img, size) for img in images]

    stack = np.stack(images)[:, None, :, :]
    return stack, dataset.labels()
