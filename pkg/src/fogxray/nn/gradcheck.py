"""Finite-difference verification of the backward pass.

Runs a shrunken model (8x8x3 input, 2/3/4 conv channels, 8 dense units,
dropout disabled) in float64 and compares every parameter's backprop
gradient against central differences of the loss. The check model is small
enough that perturbing each of its few hundred parameters individually
takes seconds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..seeding import rng_for
from .losses import binary_cross_entropy, binary_cross_entropy_grad
from .model import Model, build_model

TINY_INPUT_HW = 8
TINY_CHANNELS = (2, 3, 4)
TINY_DENSE_UNITS = 8
TINY_KERNEL = 3


@dataclass(frozen=True)
class GradCheckResult:
    max_rel_error: dict[str, float]  # per parameter tensor
    threshold: float

    @property
    def passed(self) -> bool:
        return all(e < self.threshold for e in self.max_rel_error.values())

    @property
    def worst(self) -> float:
        return max(self.max_rel_error.values())


def build_check_model(seed: int) -> Model:
    model = build_model(
        "three_block", seed,
        input_hw=TINY_INPUT_HW, conv_channels=TINY_CHANNELS,
        dense_units=TINY_DENSE_UNITS, kernel=TINY_KERNEL,
        dropout_rates=(0.0, 0.0),
    )
    return model.cast(np.float64)


def _loss(model: Model, images: np.ndarray, labels: np.ndarray) -> float:
    probs = model.forward(images, training=False).reshape(-1)
    return binary_cross_entropy(probs, labels)


def backprop_gradients(model: Model, images: np.ndarray, labels: np.ndarray) -> dict[str, np.ndarray]:
    probs = model.forward(images, training=False)
    d_probs = binary_cross_entropy_grad(probs.reshape(-1), labels).reshape(probs.shape)
    model.backward(d_probs)
    return {name: g.copy() for name, g in model.gradients().items()}


def finite_difference_gradients(model: Model, images: np.ndarray, labels: np.ndarray,
                                h: float = 1e-3) -> dict[str, np.ndarray]:
    """Central differences (loss(p+h) - loss(p-h)) / 2h for every element."""
    out = {}
    for name, param in model.parameters().items():
        arr = param.array
        grad = np.zeros_like(arr)
        it = np.nditer(arr, flags=["multi_index"])
        while not it.finished:
            i = it.multi_index
            original = arr[i]
            arr[i] = original + h
            up = _loss(model, images, labels)
            arr[i] = original - h
            down = _loss(model, images, labels)
            arr[i] = original
            grad[i] = (up - down) / (2.0 * h)
            it.iternext()
        out[name] = grad
    return out


def relative_errors(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """|a-b| / max(|a|,|b|) elementwise; pairs below 1e-10 in magnitude count as exact."""
    scale = np.maximum(np.abs(a), np.abs(b))
    err = np.abs(a - b)
    return np.where(scale > 1e-10, err / np.maximum(scale, 1e-300), 0.0)


def gradient_check(seed: int = 0, h: float = 1e-3, threshold: float = 1e-4,
                   batch: int = 4, corrupt_param: str | None = None) -> GradCheckResult:
    """Compare backprop to finite differences on the shrunken model.

    `corrupt_param` injects an offset into one backprop gradient before the
    comparison; it exists so the failure path is testable.
    """
    model = build_check_model(seed)
    rng = rng_for(seed, "gradcheck-data")
    images = rng.uniform(0.0, 1.0, size=(batch, TINY_INPUT_HW, TINY_INPUT_HW, 3))
    labels = rng.integers(0, 2, size=batch).astype(np.int64)

    analytic = backprop_gradients(model, images, labels)
    if corrupt_param is not None:
        if corrupt_param not in analytic:
            raise KeyError(f"no parameter named {corrupt_param!r}")
        analytic[corrupt_param] = analytic[corrupt_param] + 1e-2
    numeric = finite_difference_gradients(model, images, labels, h=h)

    max_rel = {
        name: float(relative_errors(analytic[name], numeric[name]).max())
        for name in analytic
    }
    return GradCheckResult(max_rel_error=max_rel, threshold=threshold)
