"""Adam with coupled L2 weight decay, plus the step learning-rate schedule.

The schedule divides the rate by ten every 30 epochs. That division is done
in decimal arithmetic: 1e-5 * 0.1 in binary floats is not 1e-6, and the
scheduled rates are decimal quantities by definition, so each is computed
exactly and rounded to float once.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Decimal

import numpy as np


@dataclass
class AdamState:
    """Moments and step count for one parameter tensor."""

    m: np.ndarray
    v: np.ndarray
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 1e-4

    @classmethod
    def for_param(cls, param: np.ndarray, **hyper) -> "AdamState":
        return cls(m=np.zeros_like(param), v=np.zeros_like(param), **hyper)


def adam_step(
    param: np.ndarray, grad: np.ndarray, state: AdamState, lr: float
) -> tuple[np.ndarray, AdamState]:
    """One update; decay couples into the gradient (classical L2).

    Mutates the state's moments in place and returns the new parameter."""
    if param.shape != grad.shape:
        raise ValueError(f"param {param.shape} vs grad {grad.shape}")
    if lr <= 0:
        raise ValueError("lr must be positive")
    if not np.isfinite(grad).all():
        raise ValueError("non-finite gradient, step rejected")

    g = grad + state.weight_decay * param
    state.m *= state.beta1
    state.m += (1.0 - state.beta1) * g
    state.v *= state.beta2
    state.v += (1.0 - state.beta2) * (g * g)
    state.t += 1
    m_hat = state.m / (1.0 - state.beta1 ** state.t)
    v_hat = state.v / (1.0 - state.beta2 ** state.t)
    return param - lr * m_hat / (np.sqrt(v_hat) + state.eps), state


@dataclass(frozen=True)
class LrSchedule:
    """Piecewise-constant rate: base_lr * decay^(epoch // period)."""

    base_lr: float = 1e-5
    decay: float = 0.1
    period: int = 30

    def __post_init__(self) -> None:
        if self.base_lr <= 0 or not 0 < self.decay <= 1 or self.period < 1:
            raise ValueError("invalid schedule parameters")


def lr_at_epoch(schedule: LrSchedule, epoch: int) -> float:
    """Exact decimal evaluation of the staircase, rounded to float once."""
    if epoch < 0:
        raise ValueError("epoch must be >= 0")
    k = epoch // schedule.period
    exact = Decimal(str(schedule.base_lr)) * Decimal(str(schedule.decay)) ** k
    return float(exact)
