"""Layers of the convolutional classifier: forward passes, reverse-mode
gradients, and the parameter-count arithmetic the builders rely on.

Conventions:
  - activations are batched NHWC float arrays ([batch, height, width, channels]);
  - conv weights are [kernel_h, kernel_w, in_channels, out_channels], dense
    weights [in_features, out_features];
  - forward caches whatever backward needs; backward consumes the cache of
    the most recent forward and writes parameter gradients into `grads`.

Layers compute in the dtype of their parameters, so a model cast to
float64 runs the identical math at higher precision (used by the
gradient checker).
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..tensor import ShapeError, Tensor, zeros
from .initializers import glorot_uniform_init


def relu(x: np.ndarray) -> np.ndarray:
    """max(x, 0) elementwise."""
    return np.maximum(x, 0)


def sigmoid(x: np.ndarray) -> np.ndarray:
    """1 / (1 + exp(-x)) elementwise, overflow-safe on both tails."""
    x = np.asarray(x)
    out = np.empty_like(x, dtype=x.dtype if x.dtype.kind == "f" else np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _apply_activation(name, z):
    """Returns (activated, cache-for-backward)."""
    if name is None:
        return z, None
    if name == "relu":
        return np.maximum(z, 0), z > 0
    if name == "sigmoid":
        a = sigmoid(z)
        return a, a
    raise ValueError(f"unknown activation {name!r}")


def _activation_grad(name, cache, d_activated):
    if name is None:
        return d_activated
    if name == "relu":
        return d_activated * cache
    if name == "sigmoid":
        return d_activated * cache * (1 - cache)
    raise ValueError(f"unknown activation {name!r}")


def conv2d_param_count(out_channels: int, in_channels: int, kernel_h: int, kernel_w: int) -> int:
    """out_channels * (in_channels * kernel_h * kernel_w + 1): one bias per filter."""
    if min(out_channels, in_channels, kernel_h, kernel_w) <= 0:
        raise ValueError("all arguments must be positive")
    return out_channels * (in_channels * kernel_h * kernel_w + 1)


def dense_param_count(in_features: int, out_features: int) -> int:
    if min(in_features, out_features) <= 0:
        raise ValueError("all arguments must be positive")
    return in_features * out_features + out_features


def pool_output_dim(input_dim: int, pool: int, stride: int) -> int:
    return (input_dim - pool) // stride + 1


class Layer:
    """Common surface: forward/backward, parameters and their gradients."""

    type_name = "Layer"

    def __init__(self):
        self.params: dict[str, Tensor] = {}
        self.grads: dict[str, np.ndarray] = {}

    def forward(self, x: np.ndarray, training: bool = False) -> np.ndarray:
        raise NotImplementedError

    def backward(self, d_out: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def output_shape(self, input_shape: tuple[int, ...]) -> tuple[int, ...]:
        raise NotImplementedError

    def param_count(self) -> int:
        return sum(t.size for t in self.params.values())

    def cast(self, dtype) -> None:
        self.params = {k: t.astype(dtype) for k, t in self.params.items()}


class Conv2D(Layer):
    """2-D convolution, "same" padding, ReLU by default.

    "Same" padding pads each spatial axis by kernel-1 in total, split
    floor((k-1)/2) before and ceil((k-1)/2) after, so stride-1 output
    spatial dims equal the input's.
    """

    type_name = "Conv2D"

    def __init__(self, in_channels: int, out_channels: int, kernel: int = 6,
                 stride: int = 1, activation: str | None = "relu", seed: int = 0):
        super().__init__()
        if min(in_channels, out_channels, kernel, stride) <= 0:
            raise ValueError("channels, kernel and stride must be positive")
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel = kernel
        self.stride = stride
        self.activation = activation
        fan_in = in_channels * kernel * kernel
        fan_out = out_channels * kernel * kernel
        self.params = {
            "weights": glorot_uniform_init(
                (kernel, kernel, in_channels, out_channels), fan_in, fan_out, seed),
            "bias": zeros((out_channels,)),
        }
        self._cache = None

    def _padding(self, dim: int) -> tuple[int, int, int]:
        """(pad_before, pad_after, output_dim) for one spatial axis."""
        out = -(-dim // self.stride)  # ceil
        total = max((out - 1) * self.stride + self.kernel - dim, 0)
        return total // 2, total - total // 2, out

    def output_shape(self, input_shape):
        h, w, c = input_shape
        if c != self.in_channels:
            raise ShapeError(f"expected {self.in_channels} input channels, got {c}")
        _, _, oh = self._padding(h)
        _, _, ow = self._padding(w)
        return (oh, ow, self.out_channels)

    def forward(self, x, training=False):
        b, h, w, c = x.shape
        if c != self.in_channels:
            raise ShapeError(f"expected {self.in_channels} input channels, got {c}")
        pt, pb, oh = self._padding(h)
        pl, pr, ow = self._padding(w)
        k, s = self.kernel, self.stride
        weights = self.params["weights"].array
        bias = self.params["bias"].array

        padded = np.pad(x, ((0, 0), (pt, pb), (pl, pr), (0, 0)))
        windows = sliding_window_view(padded, (k, k), axis=(1, 2))[:, ::s, ::s]
        # windows: [b, oh, ow, c, k, k] -> columns in (ky, kx, ci) order
        cols = windows.transpose(0, 1, 2, 4, 5, 3).reshape(b * oh * ow, k * k * c)
        w_flat = weights.reshape(k * k * c, self.out_channels)
        z = (cols @ w_flat + bias).reshape(b, oh, ow, self.out_channels)
        a, act_cache = _apply_activation(self.activation, z)
        self._cache = (cols, x.shape, (pt, pb, pl, pr), (oh, ow), act_cache)
        return a

    def backward(self, d_out):
        cols, x_shape, (pt, pb, pl, pr), (oh, ow), act_cache = self._cache
        b, h, w, c = x_shape
        k, s = self.kernel, self.stride
        w_flat = self.params["weights"].array.reshape(k * k * c, self.out_channels)

        dz = _activation_grad(self.activation, act_cache, d_out)
        dz_flat = dz.reshape(b * oh * ow, self.out_channels)
        self.grads["weights"] = (cols.T @ dz_flat).reshape(k, k, c, self.out_channels)
        self.grads["bias"] = dz_flat.sum(axis=0)

        d_cols = (dz_flat @ w_flat.T).reshape(b, oh, ow, k, k, c)
        d_padded = np.zeros((b, h + pt + pb, w + pl + pr, c), dtype=d_out.dtype)
        for ky in range(k):
            for kx in range(k):
                d_padded[:, ky:ky + s * (oh - 1) + 1:s,
                         kx:kx + s * (ow - 1) + 1:s, :] += d_cols[:, :, :, ky, kx, :]
        return d_padded[:, pt:pt + h, pl:pl + w, :]


class MaxPool2D(Layer):
    """Window max with "valid" extent: output dim = (n - pool) // stride + 1."""

    type_name = "MaxPooling2D"

    def __init__(self, pool: int = 2, stride: int = 2):
        super().__init__()
        if pool <= 0 or stride <= 0:
            raise ValueError("pool and stride must be positive")
        self.pool = pool
        self.stride = stride
        self._cache = None

    def output_shape(self, input_shape):
        h, w, c = input_shape
        if self.pool > h or self.pool > w:
            raise ShapeError(f"pool {self.pool} exceeds input dims {h}x{w}")
        return (pool_output_dim(h, self.pool, self.stride),
                pool_output_dim(w, self.pool, self.stride), c)

    def forward(self, x, training=False):
        b, h, w, c = x.shape
        if self.pool > h or self.pool > w:
            raise ShapeError(f"pool {self.pool} exceeds input dims {h}x{w}")
        p, s = self.pool, self.stride
        windows = sliding_window_view(x, (p, p), axis=(1, 2))[:, ::s, ::s]
        oh, ow = windows.shape[1], windows.shape[2]
        flat = windows.reshape(b, oh, ow, c, p * p)
        # argmax takes the first maximum, which keeps tied windows deterministic
        idx = flat.argmax(axis=-1)
        out = np.take_along_axis(flat, idx[..., None], axis=-1)[..., 0]
        self._cache = (x.shape, idx, (oh, ow))
        return out

    def backward(self, d_out):
        x_shape, idx, (oh, ow) = self._cache
        b, h, w, c = x_shape
        p, s = self.pool, self.stride
        bb, oy, ox, cc = np.indices(idx.shape, sparse=False)
        hy = oy * s + idx // p
        wx = ox * s + idx % p
        dx = np.zeros(x_shape, dtype=d_out.dtype)
        np.add.at(dx, (bb, hy, wx, cc), d_out)
        return dx


class Dropout(Layer):
    """Inverted dropout: keep with probability 1-rate, scale kept values by
    1/(1-rate) so the expected output equals the input. Identity at inference.

    Masks come from the layer's own generator, seeded at construction, so a
    rebuilt layer with the same seed replays the same mask sequence.
    """

    type_name = "Dropout"

    def __init__(self, rate: float, rng_seed: int = 0):
        super().__init__()
        if not 0.0 <= rate < 1.0:
            raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
        self.rate = rate
        self.rng_seed = rng_seed
        self._rng = np.random.default_rng(rng_seed)
        self._cache = None

    def output_shape(self, input_shape):
        return tuple(input_shape)

    def forward(self, x, training=False):
        if not training or self.rate == 0.0:
            self._cache = None
            return x
        keep = 1.0 - self.rate
        mask = (self._rng.random(x.shape) >= self.rate).astype(x.dtype)
        self._cache = mask
        return x * mask / keep

    def backward(self, d_out):
        if self._cache is None:
            return d_out
        return d_out * self._cache / (1.0 - self.rate)


class Flatten(Layer):
    """[b, h, w, c] -> [b, h*w*c], row-major."""

    type_name = "Flatten"

    def __init__(self):
        super().__init__()
        self._cache = None

    def output_shape(self, input_shape):
        n = 1
        for d in input_shape:
            n *= d
        return (n,)

    def forward(self, x, training=False):
        self._cache = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, d_out):
        return d_out.reshape(self._cache)


class Dense(Layer):
    """Fully connected: out = x @ W + b, optional activation."""

    type_name = "Dense"

    def __init__(self, in_features: int, out_features: int,
                 activation: str | None = None, seed: int = 0):
        super().__init__()
        if in_features <= 0 or out_features <= 0:
            raise ValueError("feature counts must be positive")
        self.in_features = in_features
        self.out_features = out_features
        self.activation = activation
        self.params = {
            "weights": glorot_uniform_init(
                (in_features, out_features), in_features, out_features, seed),
            "bias": zeros((out_features,)),
        }
        self._cache = None

    def output_shape(self, input_shape):
        if len(input_shape) != 1 or input_shape[0] != self.in_features:
            raise ShapeError(f"expected input of {self.in_features} features, got {input_shape}")
        return (self.out_features,)

    def forward(self, x, training=False):
        if x.shape[1] != self.in_features:
            raise ShapeError(f"expected {self.in_features} input features, got {x.shape[1]}")
        z = x @ self.params["weights"].array + self.params["bias"].array
        a, act_cache = _apply_activation(self.activation, z)
        self._cache = (x, act_cache)
        return a

    def backward(self, d_out):
        x, act_cache = self._cache
        dz = _activation_grad(self.activation, act_cache, d_out)
        self.grads["weights"] = x.T @ dz
        self.grads["bias"] = dz.sum(axis=0)
        return dz @ self.params["weights"].array.T
