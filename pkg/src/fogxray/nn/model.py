"""Model container and the two CNN variant builders.

The three_block variant stacks three conv/pool/dropout blocks with
64/128/256 filters of 6x6 kernels ("same" padding), then flattens into a
ReLU dense layer of 512 units and a single sigmoid output unit. On
200x200x3 input the shape chain is

    [200,200,3] -> [200,200,64] -> [100,100,64] -> [100,100,128]
    -> [50,50,128] -> [50,50,256] -> [25,25,256] -> [160000] -> [512] -> [1]

for a total of 83,402,945 parameters. The two_block variant drops the
256-filter block, flattening 50*50*128 = 320,000 features.

All randomness (weight init, dropout masks) derives from the single build
seed through named sub-seeds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..seeding import derive_seed
from ..tensor import ShapeError, Tensor
from .layers import (
    Conv2D,
    Dense,
    Dropout,
    Flatten,
    Layer,
    MaxPool2D,
    conv2d_param_count,
    dense_param_count,
    pool_output_dim,
)

VARIANTS = ("two_block", "three_block")

DEFAULT_INPUT_HW = 200
DEFAULT_CHANNELS = (64, 128, 256)
DEFAULT_KERNEL = 6
DEFAULT_DENSE_UNITS = 512
DEFAULT_DROPOUT = (0.25, 0.5)  # after each pool / after the wide dense

_BASE_NAMES = {
    "Conv2D": "conv2d",
    "MaxPooling2D": "max_pooling2d",
    "Dropout": "dropout",
    "Flatten": "flatten",
    "Dense": "dense",
}


@dataclass(frozen=True)
class LayerRow:
    """One line of a model summary."""
    name: str
    type_name: str
    output_shape: tuple[int, ...]
    param_count: int


def _assign_names(type_names: list[str]) -> list[str]:
    counts: dict[str, int] = {}
    names = []
    for t in type_names:
        base = _BASE_NAMES[t]
        n = counts.get(base, 0)
        counts[base] = n + 1
        names.append(base if n == 0 else f"{base}_{n}")
    return names


def _variant_channels(variant: str, conv_channels) -> tuple[int, ...]:
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}, expected one of {VARIANTS}")
    blocks = 2 if variant == "two_block" else 3
    if len(conv_channels) < blocks:
        raise ValueError(f"{variant} needs {blocks} channel sizes, got {conv_channels}")
    return tuple(conv_channels[:blocks])


def _check_input_hw(input_hw: int, blocks: int) -> None:
    if input_hw % (2 ** blocks) != 0:
        raise ValueError(
            f"input size {input_hw} must be divisible by {2 ** blocks} "
            f"so each pooling stage halves it exactly"
        )


class Model:
    """Ordered layer stack with named parameters.

    A model is confined to one training session at a time; forward passes on
    a model nobody is training are safe to run concurrently.
    """

    def __init__(self, layers: list[Layer], input_shape: tuple[int, int, int], variant: str):
        self.layers = layers
        self.layer_names = _assign_names([l.type_name for l in layers])
        self.input_shape = tuple(input_shape)
        self.variant = variant

    @property
    def input_hw(self) -> int:
        return self.input_shape[0]

    def forward(self, x: np.ndarray, training: bool = False) -> np.ndarray:
        if x.ndim != 4 or tuple(x.shape[1:]) != self.input_shape:
            raise ShapeError(
                f"expected batched input of shape {self.input_shape}, got {tuple(x.shape)}"
            )
        for layer in self.layers:
            x = layer.forward(x, training=training)
        return x

    def backward(self, d_out: np.ndarray) -> np.ndarray:
        for layer in reversed(self.layers):
            d_out = layer.backward(d_out)
        return d_out

    def parameters(self) -> dict[str, Tensor]:
        out: dict[str, Tensor] = {}
        for name, layer in zip(self.layer_names, self.layers):
            for pname, tensor in layer.params.items():
                out[f"{name}/{pname}"] = tensor
        return out

    def gradients(self) -> dict[str, np.ndarray]:
        out: dict[str, np.ndarray] = {}
        for name, layer in zip(self.layer_names, self.layers):
            for pname in layer.params:
                out[f"{name}/{pname}"] = layer.grads[pname]
        return out

    def total_param_count(self) -> int:
        return sum(l.param_count() for l in self.layers)

    def cast(self, dtype) -> "Model":
        """In-place dtype change of every parameter (float64 for grad checks)."""
        for layer in self.layers:
            layer.cast(dtype)
        return self

    def summary(self) -> list[LayerRow]:
        rows = []
        shape: tuple[int, ...] = self.input_shape
        for name, layer in zip(self.layer_names, self.layers):
            shape = layer.output_shape(shape)
            rows.append(LayerRow(name, layer.type_name, shape, layer.param_count()))
        return rows

    def layer_output_shapes(self, x: np.ndarray, training: bool = False) -> list[tuple[int, ...]]:
        """Run a forward pass, recording each layer's actual output shape
        (without the batch dimension)."""
        if x.ndim == 3:
            x = x[None, ...]
        shapes = []
        for layer in self.layers:
            x = layer.forward(x, training=training)
            shapes.append(tuple(x.shape[1:]))
        return shapes


def build_model(variant: str, seed: int, input_hw: int = DEFAULT_INPUT_HW,
                conv_channels=DEFAULT_CHANNELS, dense_units: int = DEFAULT_DENSE_UNITS,
                kernel: int = DEFAULT_KERNEL, dropout_rates=DEFAULT_DROPOUT) -> Model:
    """Materialize a variant with Glorot-initialized weights."""
    channels = _variant_channels(variant, conv_channels)
    _check_input_hw(input_hw, len(channels))
    block_rate, dense_rate = dropout_rates

    layers: list[Layer] = []
    in_ch = 3
    hw = input_hw
    index = 0

    def next_seed(label: str) -> int:
        return derive_seed(seed, label)

    for out_ch in channels:
        layers.append(Conv2D(in_ch, out_ch, kernel=kernel, activation="relu",
                             seed=next_seed(f"init-conv-{index}")))
        layers.append(MaxPool2D(pool=2, stride=2))
        layers.append(Dropout(block_rate, rng_seed=next_seed(f"dropout-{index}")))
        in_ch = out_ch
        hw = pool_output_dim(hw, 2, 2)
        index += 1

    flat = hw * hw * in_ch
    layers.append(Flatten())
    layers.append(Dense(flat, dense_units, activation="relu",
                        seed=next_seed("init-dense-0")))
    layers.append(Dropout(dense_rate, rng_seed=next_seed(f"dropout-{index}")))
    layers.append(Dense(dense_units, 1, activation="sigmoid",
                        seed=next_seed("init-dense-1")))
    return Model(layers, (input_hw, input_hw, 3), variant)


def summarize_variant(variant: str, input_hw: int = DEFAULT_INPUT_HW,
                      conv_channels=DEFAULT_CHANNELS, dense_units: int = DEFAULT_DENSE_UNITS,
                      kernel: int = DEFAULT_KERNEL) -> list[LayerRow]:
    """Summary rows for a variant, computed without allocating any weights."""
    channels = _variant_channels(variant, conv_channels)
    _check_input_hw(input_hw, len(channels))

    type_names: list[str] = []
    rows_wo_names: list[tuple[str, tuple[int, ...], int]] = []
    in_ch = 3
    hw = input_hw
    for out_ch in channels:
        type_names += ["Conv2D", "MaxPooling2D", "Dropout"]
        rows_wo_names.append(("Conv2D", (hw, hw, out_ch),
                              conv2d_param_count(out_ch, in_ch, kernel, kernel)))
        hw = pool_output_dim(hw, 2, 2)
        rows_wo_names.append(("MaxPooling2D", (hw, hw, out_ch), 0))
        rows_wo_names.append(("Dropout", (hw, hw, out_ch), 0))
        in_ch = out_ch

    flat = hw * hw * in_ch
    type_names += ["Flatten", "Dense", "Dropout", "Dense"]
    rows_wo_names.append(("Flatten", (flat,), 0))
    rows_wo_names.append(("Dense", (dense_units,), dense_param_count(flat, dense_units)))
    rows_wo_names.append(("Dropout", (dense_units,), 0))
    rows_wo_names.append(("Dense", (1,), dense_param_count(dense_units, 1)))

    names = _assign_names(type_names)
    return [LayerRow(n, t, s, p) for n, (t, s, p) in zip(names, rows_wo_names)]


def format_shape(shape: tuple[int, ...]) -> str:
    dims = ", ".join(str(d) for d in shape)
    return f"(None, {dims})"


def format_summary(rows: list[LayerRow]) -> str:
    lines = [f"{'layer (type)':<40}{'output shape':<24}{'params':>12}"]
    for r in rows:
        label = f"{r.name} ({r.type_name})"
        lines.append(f"{label:<40}{format_shape(r.output_shape):<24}{r.param_count:>12}")
    total = sum(r.param_count for r in rows)
    lines.append(f"{'total':<40}{'':<24}{total:>12}")
    return "\n".join(lines)
