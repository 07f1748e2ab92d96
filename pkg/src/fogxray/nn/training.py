"""Training loop: deterministic minibatch Adam with per-epoch metric rows
and early stopping on validation loss.

One history row per epoch carries loss, accuracy, precision, recall and F1
for both the training and validation sets, measured in inference mode
(dropout off) after the epoch's updates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import metrics as metrics_mod
from ..seeding import rng_for
from ..tensor import ShapeError
from .losses import binary_cross_entropy, binary_cross_entropy_grad
from .model import Model
from .optim import Adam

HISTORY_COLUMNS = (
    "epoch",
    "train_loss", "train_accuracy", "train_precision", "train_recall", "train_f1",
    "val_loss", "val_accuracy", "val_precision", "val_recall", "val_f1",
)


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    train_loss: float
    train_accuracy: float
    train_precision: float
    train_recall: float
    train_f1: float
    val_loss: float
    val_accuracy: float
    val_precision: float
    val_recall: float
    val_f1: float

    def as_row(self) -> tuple:
        return tuple(getattr(self, c) for c in HISTORY_COLUMNS)


def _as_batch(images: np.ndarray, input_shape: tuple[int, int, int]) -> np.ndarray:
    images = np.asarray(images, dtype=np.float32)
    if images.ndim == 3:
        images = images[None, ...]
    if images.ndim != 4 or tuple(images.shape[1:]) != tuple(input_shape):
        raise ShapeError(
            f"expected images shaped {tuple(input_shape)}, got {tuple(images.shape[1:])}"
        )
    return images


def predict(model: Model, images: np.ndarray) -> np.ndarray:
    """Per-image probability of class 1, inference mode."""
    batch = _as_batch(images, model.input_shape)
    return model.forward(batch, training=False).reshape(-1)


def hard_labels(probabilities: np.ndarray) -> np.ndarray:
    """Threshold at 0.5; exactly 0.5 counts as class 1."""
    return (np.asarray(probabilities) >= 0.5).astype(np.int64)


def evaluate(model: Model, images: np.ndarray, labels: np.ndarray):
    """(loss, MetricReport) on a labeled set, inference mode."""
    probs = predict(model, images)
    loss = binary_cross_entropy(probs, labels)
    counts = metrics_mod.confusion(hard_labels(probs), np.asarray(labels, dtype=np.int64))
    return loss, metrics_mod.compute_metrics(counts).with_log_loss(loss)


def fit(model: Model, train_set, val_set, epochs: int, batch_size: int = 32,
        lr: float = 0.001, early_stop_patience: int | None = 20,
        seed: int = 0) -> list[EpochStats]:
    """Train `model` in place; returns one EpochStats per completed epoch.

    `train_set` and `val_set` are (images, labels) pairs; `val_set` may be
    None, which disables validation metrics (reported as nan) and early
    stopping. Batch order reshuffles deterministically per (seed, epoch);
    the final short batch is kept.
    """
    train_images, train_labels = train_set
    train_images = _as_batch(train_images, model.input_shape)
    train_labels = np.asarray(train_labels, dtype=np.int64)
    n = train_images.shape[0]
    if n == 0:
        raise ValueError("training set is empty")
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    if epochs < 0:
        raise ValueError("epochs must be >= 0")

    has_val = val_set is not None and len(val_set[1]) > 0
    if has_val:
        val_images = _as_batch(val_set[0], model.input_shape)
        val_labels = np.asarray(val_set[1], dtype=np.int64)

    optimizer = Adam(model.parameters(), lr=lr)
    history: list[EpochStats] = []
    best_val = float("inf")
    stale = 0

    for epoch in range(1, epochs + 1):
        order = rng_for(seed, f"shuffle-epoch-{epoch}").permutation(n)
        for start in range(0, n, batch_size):
            idx = order[start:start + batch_size]
            x = train_images[idx]
            g = train_labels[idx]
            probs = model.forward(x, training=True)
            d_probs = binary_cross_entropy_grad(probs.reshape(-1), g).reshape(probs.shape)
            model.backward(d_probs)
            optimizer.step(model.gradients())

        train_loss, train_report = evaluate(model, train_images, train_labels)
        if has_val:
            val_loss, val_report = evaluate(model, val_images, val_labels)
        else:
            val_loss, val_report = float("nan"), None

        history.append(EpochStats(
            epoch=epoch,
            train_loss=train_loss,
            train_accuracy=train_report.accuracy,
            train_precision=train_report.precision,
            train_recall=train_report.recall,
            train_f1=train_report.f1,
            val_loss=val_loss,
            val_accuracy=val_report.accuracy if val_report else float("nan"),
            val_precision=val_report.precision if val_report else float("nan"),
            val_recall=val_report.recall if val_report else float("nan"),
            val_f1=val_report.f1 if val_report else float("nan"),
        ))

        if has_val and early_stop_patience and early_stop_patience > 0:
            if val_loss < best_val:
                best_val = val_loss
                stale = 0
            else:
                stale += 1
                if stale >= early_stop_patience:
                    break

    return history


def history_csv_lines(history: list[EpochStats]) -> list[str]:
    lines = [",".join(HISTORY_COLUMNS)]
    for row in history:
        values = row.as_row()
        lines.append(",".join([str(values[0])] + [f"{v:.10g}" for v in values[1:]]))
    return lines
