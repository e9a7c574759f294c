"""From-scratch convolutional network: layers, loss, optimizers, persistence."""

from .checkpoint import load_checkpoint, save_checkpoint
from .gradcheck import gradient_check
from .layers import Conv2D, Dense, Dropout, Flatten, MaxPool2, ReLU
from .loss import softmax, softmax_xent
from .network import INPUT_SIZES, Network, build_two_stage, two_stage_flat_size
from .optim import SGD, Adam, make_optimizer

__all__ = [
    "Adam",
    "Conv2D",
    "Dense",
    "Dropout",
    "Flatten",
    "INPUT_SIZES",
    "MaxPool2",
    "Network",
    "ReLU",
    "SGD",
    "build_two_stage",
    "gradient_check",
    "load_checkpoint",
    "make_optimizer",
    "save_checkpoint",
    "softmax",
    "softmax_xent",
    "two_stage_flat_size",
]
