"""Checkpoint serialization.

Binary layout, little-endian throughout:

    magic   4 bytes  b"FCNN"
    version u32      currently 1
    per parameter, in model order:
        name_len u32, name UTF-8 bytes
        rank     u32
        dims     u32 * rank
        values   float32 * prod(dims), row-major

Only parameters are stored. Loading reconstructs the architecture from the
parameter names and shapes (kernel size, channel widths, dense widths and
input size are all implied); dropout rates are not serialized and play no
role at inference.
"""

from __future__ import annotations

import math
import struct
from pathlib import Path

import numpy as np

from .model import Model, build_model

MAGIC = b"FCNN"
VERSION = 1


class CheckpointError(ValueError):
    """Corrupt or unreadable checkpoint file."""


def save_checkpoint(model: Model, path) -> None:
    chunks = [MAGIC, struct.pack("<I", VERSION)]
    for name, tensor in model.parameters().items():
        encoded = name.encode("utf-8")
        arr = np.ascontiguousarray(tensor.array, dtype="<f4")
        chunks.append(struct.pack("<I", len(encoded)))
        chunks.append(encoded)
        chunks.append(struct.pack("<I", arr.ndim))
        chunks.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        chunks.append(arr.tobytes(order="C"))
    Path(path).write_bytes(b"".join(chunks))


def read_parameters(path) -> dict[str, np.ndarray]:
    blob = Path(path).read_bytes()
    if blob[:4] != MAGIC:
        raise CheckpointError(f"{path}: bad magic bytes {blob[:4]!r}")
    if len(blob) < 8:
        raise CheckpointError(f"{path}: truncated header")
    (version,) = struct.unpack_from("<I", blob, 4)
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported format version {version}")

    params: dict[str, np.ndarray] = {}
    offset = 8
    while offset < len(blob):
        try:
            (name_len,) = struct.unpack_from("<I", blob, offset)
            offset += 4
            name = blob[offset:offset + name_len].decode("utf-8")
            offset += name_len
            (rank,) = struct.unpack_from("<I", blob, offset)
            offset += 4
            dims = struct.unpack_from(f"<{rank}I", blob, offset)
            offset += 4 * rank
            count = math.prod(dims)
            values = np.frombuffer(blob, dtype="<f4", count=count, offset=offset)
            offset += 4 * count
        except (struct.error, UnicodeDecodeError, ValueError) as exc:
            raise CheckpointError(f"{path}: truncated or corrupt record: {exc}") from exc
        if values.size != count:
            raise CheckpointError(f"{path}: truncated values for parameter {name!r}")
        params[name] = values.reshape(dims).copy()
    return params


def _infer_architecture(params: dict[str, np.ndarray]) -> dict:
    conv_weights = [v for k, v in params.items() if k.startswith("conv2d") and k.endswith("/weights")]
    dense_weights = [v for k, v in params.items() if k.startswith("dense") and k.endswith("/weights")]
    if not conv_weights or len(dense_weights) != 2:
        raise CheckpointError("parameter set does not describe a conv/dense classifier")
    blocks = len(conv_weights)
    if blocks not in (2, 3):
        raise CheckpointError(f"unsupported number of conv blocks: {blocks}")
    kernel = conv_weights[0].shape[0]
    channels = tuple(w.shape[3] for w in conv_weights)
    flat, dense_units = dense_weights[0].shape
    last_hw_sq, rem = divmod(flat, channels[-1])
    hw_after_pools = math.isqrt(last_hw_sq)
    if rem != 0 or hw_after_pools ** 2 != last_hw_sq:
        raise CheckpointError(f"flatten width {flat} inconsistent with {channels[-1]} channels")
    return {
        "variant": "two_block" if blocks == 2 else "three_block",
        "input_hw": hw_after_pools * (2 ** blocks),
        "conv_channels": channels,
        "dense_units": dense_units,
        "kernel": kernel,
    }


def load_model(path) -> Model:
    """Rebuild the model a checkpoint came from and load its weights."""
    params = read_parameters(path)
    arch = _infer_architecture(params)
    model = build_model(arch["variant"], seed=0, input_hw=arch["input_hw"],
                        conv_channels=arch["conv_channels"],
                        dense_units=arch["dense_units"], kernel=arch["kernel"])
    own = model.parameters()
    if set(own) != set(params):
        missing = sorted(set(own) ^ set(params))
        raise CheckpointError(f"parameter names do not match the inferred architecture: {missing}")
    for name, tensor in own.items():
        if params[name].shape != tensor.array.shape:
            raise CheckpointError(
                f"shape mismatch for {name}: file has {params[name].shape}, "
                f"model needs {tensor.array.shape}"
            )
        tensor.array[...] = params[name]
    return model
