"""Weight initialization."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from ..tensor import Tensor


def glorot_uniform_init(shape: Sequence[int], fan_in: int, fan_out: int, seed: int) -> Tensor:
    """I.i.d. uniform samples on [-a, a] with a = sqrt(6 / (fan_in + fan_out)).

    Deterministic for a given seed.
    """
    if fan_in <= 0 or fan_out <= 0:
        raise ValueError(f"fan_in and fan_out must be positive, got {fan_in}, {fan_out}")
    bound = math.sqrt(6.0 / (fan_in + fan_out))
    rng = np.random.default_rng(seed)
    return Tensor(rng.uniform(-bound, bound, size=tuple(shape)))


def glorot_bound(fan_in: int, fan_out: int) -> float:
    return math.sqrt(6.0 / (fan_in + fan_out))
