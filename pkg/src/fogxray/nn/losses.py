"""Binary cross-entropy between predicted probabilities and 0/1 labels.

The mean negative log-likelihood of the true label under the predicted
class-1 probability, natural log. Predictions are clipped to
[CLIP_EPSILON, 1 - CLIP_EPSILON] before the logs so saturated outputs
cannot produce infinities; the loss is evaluated in float64 regardless
of input dtype.
"""

from __future__ import annotations

import numpy as np

from ..tensor import ShapeError

CLIP_EPSILON = 1e-7


def _as_vectors(predictions, labels) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(predictions, dtype=np.float64).reshape(-1)
    g = np.asarray(labels, dtype=np.float64).reshape(-1)
    if p.shape != g.shape:
        raise ShapeError(f"predictions ({p.size}) and labels ({g.size}) differ in length")
    if p.size == 0:
        raise ValueError("cannot compute a loss over zero samples")
    if not np.isin(g, (0.0, 1.0)).all():
        raise ValueError("labels must be 0 or 1")
    return p, g


def binary_cross_entropy(predictions, labels) -> float:
    p, g = _as_vectors(predictions, labels)
    pc = np.clip(p, CLIP_EPSILON, 1.0 - CLIP_EPSILON)
    return float(-np.mean(g * np.log(pc) + (1.0 - g) * np.log(1.0 - pc)))


def binary_cross_entropy_grad(predictions, labels) -> np.ndarray:
    """d(loss)/d(prediction), elementwise, in the dtype of `predictions`.

    The clip is part of the forward definition, so predictions outside the
    clip range get an exactly-zero gradient.
    """
    arr = np.asarray(predictions)
    p, g = _as_vectors(predictions, labels)
    pc = np.clip(p, CLIP_EPSILON, 1.0 - CLIP_EPSILON)
    inside = (p > CLIP_EPSILON) & (p < 1.0 - CLIP_EPSILON)
    grad = (-(g / pc) + (1.0 - g) / (1.0 - pc)) / p.size
    grad = np.where(inside, grad, 0.0)
    return grad.reshape(arr.shape).astype(arr.dtype, copy=False)
