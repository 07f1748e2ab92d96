"""Dense n-dimensional float32 arrays backed by numpy.

A Tensor is a shape plus a flat row-major buffer of 32-bit floats. It is
the value type that images, feature maps and layer parameters travel in.
Storage defaults to float32; float64 is permitted so gradient-checking
code can run the same math at higher precision.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np


class ShapeError(ValueError):
    """Raised when an operation receives incompatible or illegal shapes."""


def _validate_shape(shape: Sequence[int]) -> tuple[int, ...]:
    shape = tuple(int(d) for d in shape)
    if len(shape) == 0:
        raise ShapeError("shape must have at least one dimension")
    for d in shape:
        if d < 1:
            raise ShapeError(f"dimension sizes must be >= 1, got {shape}")
    return shape


class Tensor:
    """Shape + flat row-major float buffer.

    Construct from nested sequences or an ndarray; the data is copied into
    a C-contiguous array of the requested dtype.
    """

    __slots__ = ("array",)

    def __init__(self, values, dtype=np.float32):
        arr = np.ascontiguousarray(values, dtype=dtype)
        if arr.ndim == 0:
            arr = arr.reshape(1)
        _validate_shape(arr.shape)
        self.array = arr

    @classmethod
    def from_flat(cls, flat: Iterable[float], shape: Sequence[int], dtype=np.float32) -> "Tensor":
        shape = _validate_shape(shape)
        arr = np.asarray(list(flat) if not isinstance(flat, np.ndarray) else flat, dtype=dtype)
        if arr.size != int(np.prod(shape)):
            raise ShapeError(
                f"flat data has {arr.size} elements, shape {shape} needs {int(np.prod(shape))}"
            )
        return cls(arr.reshape(shape), dtype=dtype)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.array.shape

    @property
    def size(self) -> int:
        return self.array.size

    @property
    def dtype(self):
        return self.array.dtype

    @property
    def data(self) -> np.ndarray:
        """Flat row-major view of the underlying buffer."""
        return self.array.reshape(-1)

    def strides_in_elements(self) -> tuple[int, ...]:
        """Row-major strides, counted in elements rather than bytes."""
        strides = []
        acc = 1
        for d in reversed(self.shape):
            strides.append(acc)
            acc *= d
        return tuple(reversed(strides))

    def flat_index(self, multi_index: Sequence[int]) -> int:
        """Map a multi-index to its position in the flat buffer."""
        if len(multi_index) != len(self.shape):
            raise ShapeError(
                f"index rank {len(multi_index)} does not match tensor rank {len(self.shape)}"
            )
        flat = 0
        for i, stride, d in zip(multi_index, self.strides_in_elements(), self.shape):
            if not 0 <= i < d:
                raise ShapeError(f"index {tuple(multi_index)} out of bounds for shape {self.shape}")
            flat += i * stride
        return flat

    def astype(self, dtype) -> "Tensor":
        return Tensor(self.array, dtype=dtype)

    def copy(self) -> "Tensor":
        return Tensor(self.array.copy(), dtype=self.array.dtype)

    def tolist(self):
        return self.array.tolist()

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, dtype={self.array.dtype})"


def zeros(shape: Sequence[int], dtype=np.float32) -> Tensor:
    """All-zero tensor of the given shape."""
    return Tensor(np.zeros(_validate_shape(shape), dtype=dtype), dtype=dtype)


def reshape(t: Tensor, new_shape: Sequence[int]) -> Tensor:
    """Same flat data, new shape; element counts must match."""
    new_shape = _validate_shape(new_shape)
    if int(np.prod(new_shape)) != t.size:
        raise ShapeError(
            f"cannot reshape {t.shape} ({t.size} elements) to {new_shape} "
            f"({int(np.prod(new_shape))} elements)"
        )
    return Tensor(t.array.reshape(new_shape), dtype=t.array.dtype)


_BINARY_OPS = {
    "add": np.add,
    "sub": np.subtract,
    "mul": np.multiply,
}


def elementwise_binary(a: Tensor, b: Tensor, op: str) -> Tensor:
    """Elementwise add/sub/mul of two identically shaped tensors."""
    if op not in _BINARY_OPS:
        raise ValueError(f"unknown op {op!r}, expected one of {sorted(_BINARY_OPS)}")
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch: {a.shape} vs {b.shape}")
    return Tensor(_BINARY_OPS[op](a.array, b.array), dtype=a.array.dtype)


def add(a: Tensor, b: Tensor) -> Tensor:
    return elementwise_binary(a, b, "add")


def sub(a: Tensor, b: Tensor) -> Tensor:
    return elementwise_binary(a, b, "sub")


def mul(a: Tensor, b: Tensor) -> Tensor:
    return elementwise_binary(a, b, "mul")
