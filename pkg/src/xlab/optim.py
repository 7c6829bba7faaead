"""Adadelta: adaptive per-element step sizes from running gradient statistics."""

from dataclasses import dataclass, field

import numpy as np


@dataclass
class AdadeltaState:
    """Per-parameter accumulators plus the three scalars of the update rule.

    acc_grad tracks the decayed mean of squared gradients, acc_update the
    decayed mean of squared parameter updates; both start at zero and stay
    elementwise non-negative.
    """

    lr: float = 1.0
    rho: float = 0.95
    epsilon: float = 1e-7
    acc_grad: list = field(default_factory=list)
    acc_update: list = field(default_factory=list)

    @classmethod
    def for_params(cls, params, lr=1.0, rho=0.95, epsilon=1e-7):
        state = cls(lr=lr, rho=rho, epsilon=epsilon)
        state.acc_grad = [np.zeros_like(p) for p in params]
        state.acc_update = [np.zeros_like(p) for p in params]
        return state


def adadelta_step(params, grads, state):
    """One in-place update of every parameter tensor.

    Per element: acc_g <- rho*acc_g + (1-rho)*g^2;
    delta = -sqrt((acc_u + eps) / (acc_g + eps)) * g;
    acc_u <- rho*acc_u + (1-rho)*delta^2; param <- param + lr*delta.
    Returns (params, state) for convenience.
    """
    rho, eps, lr = state.rho, state.epsilon, state.lr
    for p, g, acc_g, acc_u in zip(params, grads, state.acc_grad, state.acc_update):
        one_minus_rho = np.asarray(1.0 - rho, dtype=p.dtype)
        acc_g *= np.asarray(rho, dtype=p.dtype)
        acc_g += one_minus_rho * g * g
        delta = -np.sqrt((acc_u + eps) / (acc_g + eps)) * g
        acc_u *= np.asarray(rho, dtype=p.dtype)
        acc_u += one_minus_rho * delta * delta
        p += np.asarray(lr, dtype=p.dtype) * delta
    return params, state
