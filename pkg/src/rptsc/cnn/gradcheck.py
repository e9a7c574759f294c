"""Central finite-difference validation of the backward pass."""

from __future__ import annotations

import numpy as np

from .layers import Dropout
from .loss import softmax_xent
from .network import Network


def gradient_check(
    net: Network,
    batch: np.ndarray,
    labels: np.ndarray,
    epsilon: float = 1e-5,
    max_per_tensor: int = 20,
    seed: int = 0,
) -> float:
    """Compare analytic parameter gradients against central differences.

    Dropout is disabled for the duration of the check (the loss must be a
    deterministic function of the parameters).  For each parameter tensor up
    to ``max_per_tensor`` entries are sampled; the returned value is the
    maximum of |analytic - numeric| / max(|analytic|, |numeric|, 1e-6) over
    all sampled entries.  The 1e-6 denominator floor keeps finite-difference
    roundoff on zero-gradient parameters from registering as error.

    Large ``epsilon`` (say 1e-1) inflates the result through truncation error;
    that is a property of the probe, not of the gradients.
    """
    labels = np.asarray(labels, dtype=np.int64)
    rng = np.random.default_rng(seed)

    saved_rates = []
    for layer in net.layers:
        if isinstance(layer, Dropout):
            saved_rates.append((layer, layer.rate))
            layer.rate = 0.0
    was_training = net.training
    net.set_mode("train")
    try:
        logits = net.forward(batch)
        _, grad_logits = softmax_xent(logits, labels)
        net.backward(grad_logits)
        analytic = [g.copy() for g in net.gradients()]

        def loss_at() -> float:
            value, _ = softmax_xent(net.forward(batch), labels)
            return value

        max_rel = 0.0
        for param, grad in zip(net.parameters(), analytic):
            n = param.size
            picks = rng.choice(n, size=min(max_per_tensor, n), replace=False)
            for flat_idx in picks:
                original = param.flat[flat_idx]
                param.flat[flat_idx] = original + epsilon
                plus = loss_at()
                param.flat[flat_idx] = original - epsilon
                minus = loss_at()
                param.flat[flat_idx] = original
                numeric = (plus - minus) / (2.0 * epsilon)
                a = grad.flat[flat_idx]
                rel = abs(a - numeric) / max(abs(a), abs(numeric), 1e-6)
                max_rel = max(max_rel, rel)
        return max_rel
    finally:
        for layer, rate in saved_rates:
            layer.rate = rate
        net.set_mode("train" if was_training else "eval")
