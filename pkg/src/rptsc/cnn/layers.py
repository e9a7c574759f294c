"""Layers of the from-scratch convolutional network.

All activations are float64 arrays.  Convolutional tensors are (batch,
channels, height, width).  Each layer caches what its backward pass needs
during ``forward`` and exposes trainable parameters and their gradients as
parallel lists, so optimizers can update them in place.
"""

from __future__ import annotations

import numpy as np


def glorot_uniform(rng: np.random.Generator, shape, fan_in: int, fan_out: int):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def im2col(x: np.ndarray, k: int) -> np.ndarray:
    """Unfold valid k x k patches into rows of a (B*OH*OW, C*k*k) matrix."""
    b, c, h, w = x.shape
    oh, ow = h - k + 1, w - k + 1
    cols = np.empty((b, c, k, k, oh, ow), dtype=x.dtype)
    for u in range(k):
        for v in range(k):
            cols[:, :, u, v] = x[:, :, u : u + oh, v : v + ow]
    return cols.transpose(0, 4, 5, 1, 2, 3).reshape(b * oh * ow, c * k * k)


def col2im(cols: np.ndarray, shape, k: int) -> np.ndarray:
    """Scatter-add column rows back onto an image of the given input shape."""
    b, c, h, w = shape
    oh, ow = h - k + 1, w - k + 1
    cols6 = cols.reshape(b, oh, ow, c, k, k).transpose(0, 3, 4, 5, 1, 2)
    x = np.zeros((b, c, h, w), dtype=cols.dtype)
    for u in range(k):
        for v in range(k):
            x[:, :, u : u + oh, v : v + ow] += cols6[:, :, u, v]
    return x


class Conv2D:
    """Valid (no padding) stride-1 cross-correlation with trainable kernels."""

    def __init__(self, in_channels: int, out_channels: int, kernel_size: int,
                 rng: np.random.Generator | None = None):
        if kernel_size % 2 != 1:
            raise ValueError(f"kernel size must be odd, got {kernel_size}")
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel_size = kernel_size
        k = kernel_size
        fan_in = in_channels * k * k
        fan_out = out_channels * k * k
        if rng is None:
            self.kernels = np.zeros((out_channels, in_channels, k, k))
        else:
            self.kernels = glorot_uniform(
                rng, (out_channels, in_channels, k, k), fan_in, fan_out
            )
        self.bias = np.zeros(out_channels)
        self.grad_kernels = np.zeros_like(self.kernels)
        self.grad_bias = np.zeros_like(self.bias)
        self._cols: np.ndarray | None = None
        self._x_shape: tuple | None = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        b, c, h, w = x.shape
        k = self.kernel_size
        if c != self.in_channels:
            raise ValueError(f"expected {self.in_channels} input channels, got {c}")
        if h < k or w < k:
            raise ValueError(f"spatial size {h}x{w} smaller than kernel {k}")
        oh, ow = h - k + 1, w - k + 1
        cols = im2col(x, k)
        wmat = self.kernels.reshape(self.out_channels, -1)
        out = cols @ wmat.T + self.bias
        self._cols = cols
        self._x_shape = x.shape
        return out.reshape(b, oh, ow, self.out_channels).transpose(0, 3, 1, 2)

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        if self._cols is None:
            raise RuntimeError("backward called before forward")
        b, o, oh, ow = grad_out.shape
        if o != self.out_channels:
            raise ValueError(f"expected {self.out_channels} gradient channels, got {o}")
        g2 = grad_out.transpose(0, 2, 3, 1).reshape(-1, self.out_channels)
        self.grad_bias = g2.sum(axis=0)
        self.grad_kernels = (g2.T @ self._cols).reshape(self.kernels.shape)
        grad_cols = g2 @ self.kernels.reshape(self.out_channels, -1)
        return col2im(grad_cols, self._x_shape, self.kernel_size)

    def parameters(self):
        return [self.kernels, self.bias]

    def gradients(self):
        return [self.grad_kernels, self.grad_bias]


class ReLU:
    def __init__(self):
        self._x: np.ndarray | None = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._x = x
        return np.maximum(x, 0.0)

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        # gradient passes where x > 0, is zero where x <= 0
        return grad_out * (self._x > 0.0)


class MaxPool2:
    """2x2 max pooling with stride 2; odd trailing rows/columns are dropped.

    The argmax of each window is recorded in row-major window order, so ties
    route the gradient to the first (lowest-index) maximum.
    """

    def __init__(self):
        self._arg: np.ndarray | None = None
        self._x_shape: tuple | None = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        b, c, h, w = x.shape
        if h < 2 or w < 2:
            raise ValueError(f"spatial size {h}x{w} too small for 2x2 pooling")
        oh, ow = h // 2, w // 2
        windows = (
            x[:, :, : 2 * oh, : 2 * ow]
            .reshape(b, c, oh, 2, ow, 2)
            .transpose(0, 1, 2, 4, 3, 5)
            .reshape(b, c, oh, ow, 4)
        )
        arg = windows.argmax(axis=-1)
        out = np.take_along_axis(windows, arg[..., None], axis=-1)[..., 0]
        self._arg = arg
        self._x_shape = x.shape
        return out

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        b, c, h, w = self._x_shape
        oh, ow = h // 2, w // 2
        grad_windows = np.zeros((b, c, oh, ow, 4), dtype=grad_out.dtype)
        np.put_along_axis(grad_windows, self._arg[..., None], grad_out[..., None], axis=-1)
        grad_x = np.zeros(self._x_shape, dtype=grad_out.dtype)
        grad_x[:, :, : 2 * oh, : 2 * ow] = (
            grad_windows.reshape(b, c, oh, ow, 2, 2)
            .transpose(0, 1, 2, 4, 3, 5)
            .reshape(b, c, 2 * oh, 2 * ow)
        )
        return grad_x


class Dropout:
    """Inverted dropout: survivors are scaled by 1/(1-rate) at train time,
    so eval mode is the identity."""

    def __init__(self, rate: float, rng: np.random.Generator | None = None):
        if not 0.0 <= rate < 1.0:
            raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
        self.rate = rate
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self.training = True
        self._mask: np.ndarray | None = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        if not self.training or self.rate == 0.0:
            self._mask = None
            return x
        keep = 1.0 - self.rate
        self._mask = (self.rng.random(x.shape) >= self.rate) / keep
        return x * self._mask

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        if self._mask is None:
            return grad_out
        return grad_out * self._mask


class Flatten:
    def __init__(self):
        self._x_shape: tuple | None = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._x_shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        return grad_out.reshape(self._x_shape)


class Dense:
    """Fully connected layer, out = x @ W.T + b with W of shape (fan_out, fan_in)."""

    def __init__(self, fan_in: int, fan_out: int, rng: np.random.Generator | None = None):
        self.fan_in = fan_in
        self.fan_out = fan_out
        if rng is None:
            self.weights = np.zeros((fan_out, fan_in))
        else:
            self.weights = glorot_uniform(rng, (fan_out, fan_in), fan_in, fan_out)
        self.bias = np.zeros(fan_out)
        self.grad_weights = np.zeros_like(self.weights)
        self.grad_bias = np.zeros_like(self.bias)
        self._x: np.ndarray | None = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        if x.ndim != 2 or x.shape[1] != self.fan_in:
            raise ValueError(
                f"expected input of shape (batch, {self.fan_in}), got {x.shape}"
            )
        self._x = x
        return x @ self.weights.T + self.bias

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        self.grad_weights = grad_out.T @ self._x
        self.grad_bias = grad_out.sum(axis=0)
        return grad_out @ self.weights

    def parameters(self):
        return [self.weights, self.bias]

    def gradients(self):
        return [self.grad_weights, self.grad_bias]
