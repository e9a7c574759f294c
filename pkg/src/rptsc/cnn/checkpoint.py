"""Binary checkpointing of the 2-stage network and its optimizer state.

Layout (all integers little-endian):

    magic b"RPTS" | version u16 | input_size, kernel_size, channels, hidden,
    num_classes as u32 | record count u32 | layer records | optimizer section

Each layer record is: kind tag u8 (1 = conv, 2 = dense), parameter count u8,
then per parameter an array record (ndim u8, dims u32 each, data f64).  The
optimizer section is a kind tag u8 (0 = none, 1 = sgd, 2 = adam) followed by
its scalars and, for Adam, first/second moment array records in parameter
order.  Parameters are stored as raw f64 bytes, so a save/load round trip is
bit-exact.
"""

from __future__ import annotations

import struct

import numpy as np

from .layers import Conv2D, Dense
from .network import Network, build_two_stage
from .optim import SGD, Adam

MAGIC = b"RPTS"
VERSION = 1

_KIND_CONV = 1
_KIND_DENSE = 2
_OPT_NONE = 0
_OPT_SGD = 1
_OPT_ADAM = 2


def _pack_array(arr: np.ndarray) -> bytes:
    out = [struct.pack("<B", arr.ndim)]
    out.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
    out.append(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    return b"".join(out)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise ValueError("checkpoint truncated")
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str):
        vals = struct.unpack(fmt, self.take(struct.calcsize(fmt)))
        return vals[0] if len(vals) == 1 else vals

    def array(self) -> np.ndarray:
        ndim = self.unpack("<B")
        shape = self.unpack(f"<{ndim}I")
        if ndim == 1:
            shape = (shape,)
        count = int(np.prod(shape)) if shape else 1
        flat = np.frombuffer(self.take(8 * count), dtype="<f8")
        return flat.reshape(shape).astype(np.float64)


def save_checkpoint(net: Network, path, optimizer=None) -> None:
    """Write the network (and optionally its optimizer) to ``path``."""
    for attr in ("kernel_size", "channels", "hidden"):
        if not hasattr(net, attr):
            raise ValueError("only canonical two-stage networks can be checkpointed")
    chunks = [MAGIC, struct.pack("<H", VERSION)]
    chunks.append(
        struct.pack(
            "<5I",
            net.input_size,
            net.kernel_size,
            net.channels,
            net.hidden,
            net.num_classes,
        )
    )
    records = [l for l in net.layers if isinstance(l, (Conv2D, Dense))]
    chunks.append(struct.pack("<I", len(records)))
    for layer in records:
        kind = _KIND_CONV if isinstance(layer, Conv2D) else _KIND_DENSE
        params = layer.parameters()
        chunks.append(struct.pack("<BB", kind, len(params)))
        for p in params:
            chunks.append(_pack_array(p))

    if optimizer is None:
        chunks.append(struct.pack("<B", _OPT_NONE))
    elif isinstance(optimizer, SGD):
        chunks.append(struct.pack("<B", _OPT_SGD))
        chunks.append(struct.pack("<d", optimizer.learning_rate))
    elif isinstance(optimizer, Adam):
        chunks.append(struct.pack("<B", _OPT_ADAM))
        chunks.append(
            struct.pack(
                "<dddd",
                optimizer.learning_rate,
                optimizer.beta1,
                optimizer.beta2,
                optimizer.eps,
            )
        )
        chunks.append(struct.pack("<Q", optimizer.t))
        for m, v in zip(optimizer.m, optimizer.v):
            chunks.append(_pack_array(m))
            chunks.append(_pack_array(v))
    else:
        raise ValueError(f"cannot checkpoint optimizer of type {type(optimizer)!r}")

    blob = b"".join(chunks)
    try:
        with open(path, "wb") as fh:
            fh.write(blob)
    except OSError as exc:
        raise OSError(f"cannot write checkpoint to {path}: {exc}") from exc


def load_checkpoint(path) -> tuple[Network, object | None]:
    """Rebuild the network (in eval mode) and optimizer saved at ``path``."""
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise OSError(f"cannot read checkpoint from {path}: {exc}") from exc
    r = _Reader(data)
    if r.take(4) != MAGIC:
        raise ValueError(f"{path}: not a checkpoint file (bad magic)")
    version = r.unpack("<H")
    if version != VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    input_size, kernel_size, channels, hidden, num_classes = r.unpack("<5I")
    net = build_two_stage(
        input_size=input_size,
        num_classes=num_classes,
        kernel_size=kernel_size,
        channels=channels,
        hidden=hidden,
        seed=0,
    )
    record_count = r.unpack("<I")
    records = [l for l in net.layers if isinstance(l, (Conv2D, Dense))]
    if record_count != len(records):
        raise ValueError(f"{path}: expected {len(records)} layer records, got {record_count}")
    for layer in records:
        kind, n_params = r.unpack("<BB")
        expected = _KIND_CONV if isinstance(layer, Conv2D) else _KIND_DENSE
        if kind != expected:
            raise ValueError(f"{path}: layer kind mismatch")
        params = layer.parameters()
        if n_params != len(params):
            raise ValueError(f"{path}: parameter count mismatch")
        for p in params:
            loaded = r.array()
            if loaded.shape != p.shape:
                raise ValueError(f"{path}: parameter shape mismatch")
            p[...] = loaded

    opt_kind = r.unpack("<B")
    optimizer = None
    if opt_kind == _OPT_SGD:
        lr = r.unpack("<d")
        optimizer = SGD(net.parameters(), lr)
    elif opt_kind == _OPT_ADAM:
        lr, beta1, beta2, eps = r.unpack("<dddd")
        t = r.unpack("<Q")
        optimizer = Adam(net.parameters(), lr, beta1, beta2, eps)
        optimizer.t = t
        for i in range(len(optimizer.params)):
            optimizer.m[i][...] = r.array()
            optimizer.v[i][...] = r.array()
    elif opt_kind != _OPT_NONE:
        raise ValueError(f"{path}: unknown optimizer tag {opt_kind}")

    net.set_mode("eval")
    return net, optimizer
