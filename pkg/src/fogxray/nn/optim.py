"""Adam optimizer with bias-corrected moment estimates.

Per-parameter state: first moment m, second moment v (both zero-initialized,
same shape as the parameter) and a step counter t. One update:

    t <- t + 1
    m <- beta1*m + (1-beta1)*g
    v <- beta2*v + (1-beta2)*g^2
    m_hat = m / (1 - beta1^t);  v_hat = v / (1 - beta2^t)
    param <- param - lr * m_hat / (sqrt(v_hat) + epsilon)
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..tensor import Tensor


@dataclass
class AdamState:
    m: Tensor
    v: Tensor
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    lr: float = 0.001


def adam_state_for(param: Tensor, lr: float = 0.001, beta1: float = 0.9,
                   beta2: float = 0.999, epsilon: float = 1e-8) -> AdamState:
    dtype = param.array.dtype
    return AdamState(
        m=Tensor(np.zeros(param.shape, dtype=dtype), dtype=dtype),
        v=Tensor(np.zeros(param.shape, dtype=dtype), dtype=dtype),
        lr=lr, beta1=beta1, beta2=beta2, epsilon=epsilon,
    )


def adam_step(state: AdamState, param: Tensor, grad: np.ndarray) -> Tensor:
    """One in-place Adam update of `param`; advances `state`."""
    if tuple(grad.shape) != param.shape:
        raise ValueError(f"gradient shape {grad.shape} does not match parameter {param.shape}")
    state.t += 1
    m, v = state.m.array, state.v.array
    m *= state.beta1
    m += (1.0 - state.beta1) * grad
    v *= state.beta2
    v += (1.0 - state.beta2) * np.square(grad)
    m_hat = m / (1.0 - state.beta1 ** state.t)
    v_hat = v / (1.0 - state.beta2 ** state.t)
    param.array -= state.lr * m_hat / (np.sqrt(v_hat) + state.epsilon)
    return param


class Adam:
    """Optimizer over a named parameter dict, one AdamState per parameter."""

    def __init__(self, params: dict[str, Tensor], lr: float = 0.001,
                 beta1: float = 0.9, beta2: float = 0.999, epsilon: float = 1e-8):
        self.params = params
        self.states = {
            name: adam_state_for(p, lr=lr, beta1=beta1, beta2=beta2, epsilon=epsilon)
            for name, p in params.items()
        }

    def step(self, grads: dict[str, np.ndarray]) -> None:
        for name, param in self.params.items():
            adam_step(self.states[name], param, grads[name])
