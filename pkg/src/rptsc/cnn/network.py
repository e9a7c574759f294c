"""Layer stack assembly: the 2-stage convolutional classifier.

The canonical classifier is conv -> relu -> pool -> dropout(0.25) -> conv ->
relu -> pool -> dropout(0.25) -> flatten -> dense(hidden) -> relu ->
dropout(0.5) -> dense(classes), trained with softmax cross-entropy.  Its
shape serializes to the template string C1(k)-S1-C2(k)-S2-H-O, e.g.
``32(3)-2-32(3)-2-128-2``.
"""

from __future__ import annotations

import numpy as np

from .layers import Conv2D, Dense, Dropout, Flatten, MaxPool2, ReLU
from .loss import softmax_xent

INPUT_SIZES = (28, 56, 64)


class Network:
    """An ordered layer stack with a train/eval mode switch."""

    def __init__(self, layers: list, num_classes: int, input_size: int | None = None):
        self.layers = layers
        self.num_classes = num_classes
        self.input_size = input_size
        self.training = True

    def set_mode(self, mode: str) -> None:
        if mode not in ("train", "eval"):
            raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
        self.training = mode == "train"
        for layer in self.layers:
            if isinstance(layer, Dropout):
                layer.training = self.training

    def forward(self, x: np.ndarray) -> np.ndarray:
        if self.input_size is not None and x.shape[-2:] != (self.input_size, self.input_size):
            raise ValueError(
                f"expected {self.input_size}x{self.input_size} inputs, "
                f"got {x.shape[-2]}x{x.shape[-1]}"
            )
        for layer in self.layers:
            x = layer.forward(x)
        return x

    def backward(self, grad_logits: np.ndarray) -> np.ndarray:
        g = grad_logits
        for layer in reversed(self.layers):
            g = layer.backward(g)
        return g

    def loss_and_grads(self, x: np.ndarray, labels: np.ndarray) -> float:
        """One forward/backward pass; parameter gradients land in the layers."""
        logits = self.forward(x)
        loss, grad = softmax_xent(logits, labels)
        self.backward(grad)
        return loss

    def predict(self, x: np.ndarray) -> np.ndarray:
        """Argmax class per sample, in eval mode (ties pick the lowest index)."""
        was_training = self.training
        self.set_mode("eval")
        try:
            logits = self.forward(x)
        finally:
            self.set_mode("train" if was_training else "eval")
        return logits.argmax(axis=1)

    def parameters(self) -> list[np.ndarray]:
        out = []
        for layer in self.layers:
            if hasattr(layer, "parameters"):
                out.extend(layer.parameters())
        return out

    def gradients(self) -> list[np.ndarray]:
        out = []
        for layer in self.layers:
            if hasattr(layer, "gradients"):
                out.extend(layer.gradients())
        return out

    def get_state(self) -> list[np.ndarray]:
        return [p.copy() for p in self.parameters()]

    def set_state(self, state: list[np.ndarray]) -> None:
        params = self.parameters()
        if len(state) != len(params):
            raise ValueError("state does not match parameter list")
        for p, s in zip(params, state):
            if p.shape != s.shape:
                raise ValueError(f"state shape {s.shape} does not match {p.shape}")
            p[...] = s

    def architecture(self) -> str:
        """Template string C1(k)-S1-C2(k)-S2-H-O built from the layer stack."""
        parts = []
        for layer in self.layers:
            if isinstance(layer, Conv2D):
                parts.append(f"{layer.out_channels}({layer.kernel_size})")
            elif isinstance(layer, MaxPool2):
                parts.append("2")
            elif isinstance(layer, Dense):
                parts.append(str(layer.fan_out))
        return "-".join(parts)


def two_stage_flat_size(input_size: int, kernel_size: int, channels: int) -> int:
    """Flattened feature count after conv/pool/conv/pool on a square input."""
    s1 = input_size - kernel_size + 1
    p1 = s1 // 2
    s2 = p1 - kernel_size + 1
    p2 = s2 // 2
    if p2 < 1:
        raise ValueError(
            f"input size {input_size} too small for kernel {kernel_size}"
        )
    return channels * p2 * p2


def build_two_stage(
    input_size: int,
    num_classes: int,
    kernel_size: int = 3,
    channels: int = 32,
    hidden: int = 128,
    seed: int = 0,
) -> Network:
    """Build the canonical 2-stage classifier with seeded Glorot init.

    The same seed always produces bit-identical parameters; the dropout
    layers draw from their own stream derived from the same seed.
    """
    if input_size not in INPUT_SIZES:
        raise ValueError(f"input size must be one of {INPUT_SIZES}, got {input_size}")
    if num_classes < 2:
        raise ValueError(f"need at least 2 classes, got {num_classes}")
    init_ss, dropout_ss = np.random.SeedSequence(seed).spawn(2)
    init_rng = np.random.default_rng(init_ss)
    dropout_rng = np.random.default_rng(dropout_ss)
    flat = two_stage_flat_size(input_size, kernel_size, channels)
    layers = [
        Conv2D(1, channels, kernel_size, init_rng),
        ReLU(),
        MaxPool2(),
        Dropout(0.25, dropout_rng),
        Conv2D(channels, channels, kernel_size, init_rng),
        ReLU(),
        MaxPool2(),
        Dropout(0.25, dropout_rng),
        Flatten(),
        Dense(flat, hidden, init_rng),
        ReLU(),
        Dropout(0.5, dropout_rng),
        Dense(hidden, num_classes, init_rng),
    ]
    net = Network(layers, num_classes=num_classes, input_size=input_size)
    net.kernel_size = kernel_size
    net.channels = channels
    net.hidden = hidden
    return net
