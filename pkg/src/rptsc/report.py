"""Figure rendering for training reports.

Learning curves and first-stage kernel sheets are drawn with matplotlib and
written next to the CSV output.  Individual kernel tiles additionally go out
as exact grayscale PNGs so they can be diffed byte-for-byte.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .cnn import Network
from .cnn.layers import Conv2D
from .rp_encode import write_png
from .train import RunReport


def save_learning_curves(report: RunReport, path) -> None:
    """Loss and accuracy curves over epochs, validation overlaid if present."""
    epochs = np.arange(1, report.epochs_run + 1)
    has_val = report.best_epoch > 0
    fig, (ax_loss, ax_acc) = plt.subplots(1, 2, figsize=(9.0, 3.4))

    ax_loss.plot(epochs, report.train_loss, label="train")
    ax_acc.plot(epochs, report.train_acc, label="train")
    if has_val:
        ax_loss.plot(epochs, report.val_loss, label="validation")
        ax_acc.plot(epochs, report.val_acc, label="validation")
        ax_loss.axvline(report.best_epoch, color="gray", linewidth=0.8,
                        linestyle="--", label=f"best epoch {report.best_epoch}")
    ax_loss.set_xlabel("epoch")
    ax_loss.set_ylabel("cross-entropy loss")
    ax_loss.legend()
    ax_acc.set_xlabel("epoch")
    ax_acc.set_ylabel("accuracy")
    ax_acc.set_ylim(0.0, 1.05)
    ax_acc.legend()
    fig.suptitle(f"seed {report.seed}, batch {report.config.batch_size}")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def conv_layers(net: Network) -> list[Conv2D]:
    layers = [layer for layer in net.layers if isinstance(layer, Conv2D)]
    if not layers:
        raise ValueError("network has no convolution layer")
    return layers


def kernel_planes(conv: Conv2D) -> np.ndarray:
    """One 2D plane per kernel: the lone input channel for the first stage,
    the channel mean for deeper stages."""
    kernels = conv.kernels
    if kernels.shape[1] == 1:
        return kernels[:, 0]
    return kernels.mean(axis=1)


def kernel_tile(kernel: np.ndarray) -> np.ndarray:
    """Min-max scale one kernel to [0, 1]; flat kernels map to mid-gray."""
    lo = float(kernel.min())
    hi = float(kernel.max())
    if hi - lo < 1e-12:
        return np.full(kernel.shape, 0.5)
    return (kernel - lo) / (hi - lo)


def save_kernel_tiles(net: Network, directory, stage: int = 0,
                      scale: int = 8) -> list[str]:
    """One PNG per kernel of the given conv stage, nearest-neighbour
    upscaled by an integer factor."""
    if scale < 1:
        raise ValueError(f"scale must be >= 1, got {scale}")
    planes = kernel_planes(conv_layers(net)[stage])
    os.makedirs(directory, exist_ok=True)
    paths = []
    for i in range(planes.shape[0]):
        tile = np.kron(kernel_tile(planes[i]), np.ones((scale, scale)))
        path = os.path.join(directory, f"kernel_{i:02d}.png")
        write_png(tile, path)
        paths.append(path)
    return paths


def save_kernel_sheet(net: Network, path, stage: int = 0,
                      columns: int = 8) -> None:
    """All kernels of one conv stage on an annotated contact sheet."""
    if columns < 1:
        raise ValueError(f"columns must be >= 1, got {columns}")
    planes = kernel_planes(conv_layers(net)[stage])
    count = planes.shape[0]
    rows = (count + columns - 1) // columns
    fig, axes = plt.subplots(rows, columns,
                             figsize=(1.1 * columns, 1.25 * rows),
                             squeeze=False)
    for i in range(rows * columns):
        ax = axes[i // columns][i % columns]
        ax.set_axis_off()
        if i < count:
            ax.imshow(kernel_tile(planes[i]), cmap="gray",
                      vmin=0.0, vmax=1.0, interpolation="nearest")
            ax.set_title(str(i), fontsize=7)
    fig.suptitle(f"stage-{stage + 1} kernels "
                 f"({count}x{planes.shape[1]}x{planes.shape[2]})")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
