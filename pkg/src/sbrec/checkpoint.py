"""Versioned binary checkpoints.

Layout (all little-endian):

    magic "SGCK" | u32 version | u32 dim | u32 steps | u32 flags | u32 max_len
    | f64 order_scale | 32-byte catalog fingerprint | u32 n_blocks
    then per block: u16 name length | name utf-8 | u32 rows | u32 cols
    | rows*cols f64 values

Blocks appear in the fixed parameter order.  Loading verifies magic,
version, the catalog fingerprint, block names, and exact file length, and
refuses partial loads.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from sbrec.autodiff import Tensor
from sbrec.data.prepare import Catalog
from sbrec.model import PARAM_NAMES, HyperParams, ModelParams

MAGIC = b"SGCK"
VERSION = 1

_FLAG_ADAPTIVE = 1
_FLAG_SI = 2
_FLAG_MSI = 4
_FLAG_INCLUDE_LAST = 8


class CheckpointError(ValueError):
    """Unreadable, truncated, or mismatched checkpoint file."""


def _flags_word(hyper: HyperParams) -> int:
    word = 0
    if hyper.use_adaptive:
        word |= _FLAG_ADAPTIVE
    if hyper.use_si:
        word |= _FLAG_SI
    if hyper.use_msi:
        word |= _FLAG_MSI
    if hyper.include_last:
        word |= _FLAG_INCLUDE_LAST
    return word


def save_checkpoint(params: ModelParams, hyper: HyperParams, catalog: Catalog, path) -> None:
    path = Path(path)
    chunks = [
        MAGIC,
        struct.pack("<IIIII", VERSION, hyper.dim, hyper.steps, _flags_word(hyper), hyper.max_len),
        struct.pack("<d", hyper.order_scale),
        catalog.fingerprint(),
        struct.pack("<I", len(PARAM_NAMES)),
    ]
    for name, tensor in params.named():
        encoded = name.encode()
        chunks.append(struct.pack("<H", len(encoded)))
        chunks.append(encoded)
        chunks.append(struct.pack("<II", tensor.rows, tensor.cols))
        chunks.append(np.ascontiguousarray(tensor.data, dtype="<f8").tobytes())
    path.write_bytes(b"".join(chunks))


class _Reader:
    def __init__(self, blob: bytes, path: Path):
        self.blob = blob
        self.off = 0
        self.path = path

    def take(self, n: int) -> bytes:
        if self.off + n > len(self.blob):
            raise CheckpointError(f"{self.path}: truncated checkpoint")
        out = self.blob[self.off:self.off + n]
        self.off += n
        return out

    def done(self) -> bool:
        return self.off == len(self.blob)


def load_checkpoint(path, catalog: Catalog) -> tuple[ModelParams, HyperParams]:
    """Load parameters and the hyperparameters they were trained with.

    The stored catalog fingerprint must match ``catalog`` exactly.
    """
    path = Path(path)
    r = _Reader(path.read_bytes(), path)
    if r.take(4) != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint file")
    version, dim, steps, flags, max_len = struct.unpack("<IIIII", r.take(20))
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {version}")
    (order_scale,) = struct.unpack("<d", r.take(8))
    fingerprint = r.take(32)
    if fingerprint != catalog.fingerprint():
        raise CheckpointError(f"{path}: checkpoint was built against a different catalog")
    (n_blocks,) = struct.unpack("<I", r.take(4))
    if n_blocks != len(PARAM_NAMES):
        raise CheckpointError(f"{path}: expected {len(PARAM_NAMES)} parameter blocks, found {n_blocks}")

    hyper = HyperParams(
        dim=dim,
        steps=steps,
        order_scale=order_scale,
        max_len=max_len,
        use_adaptive=bool(flags & _FLAG_ADAPTIVE),
        use_si=bool(flags & _FLAG_SI),
        use_msi=bool(flags & _FLAG_MSI),
        include_last=bool(flags & _FLAG_INCLUDE_LAST),
    )

    tensors: dict[str, Tensor] = {}
    for expected_name in PARAM_NAMES:
        (name_len,) = struct.unpack("<H", r.take(2))
        name = r.take(name_len).decode()
        if name != expected_name:
            raise CheckpointError(f"{path}: expected block {expected_name!r}, found {name!r}")
        rows, cols = struct.unpack("<II", r.take(8))
        raw = r.take(rows * cols * 8)
        arr = np.frombuffer(raw, dtype="<f8").reshape(rows, cols)
        tensors[name] = Tensor(arr, requires_grad=True)
    if not r.done():
        raise CheckpointError(f"{path}: trailing bytes after last block")
    return ModelParams(**tensors), hyper
