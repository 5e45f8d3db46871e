"""AdamW with decoupled weight decay and a step learning-rate schedule.

Per tensor, at step t:
    θ ← θ − lr·wd·θ
    m ← β₁m + (1 − β₁)g          v ← β₂v + (1 − β₂)g²
    θ ← θ − lr · m̂ / (√v̂ + ε)    with m̂ = m/(1 − β₁ᵗ), v̂ = v/(1 − β₂ᵗ)
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from dual_ldl.errors import InvalidArgumentError, StateError
from dual_ldl.models.training import AdamWConfig

Tensors = list[NDArray[np.float64]]


@dataclass(frozen=True)
class AdamWState:
    """First and second moment estimates, one pair per parameter tensor."""

    m: Tensors
    v: Tensors

    @classmethod
    def zeros_like(cls, params: Sequence[NDArray[np.float64]]) -> AdamWState:
        return cls(m=[np.zeros_like(p) for p in params], v=[np.zeros_like(p) for p in params])


def adamw_step(
    params: Sequence[NDArray[np.float64]],
    grads: Sequence[NDArray[np.float64]],
    state: AdamWState,
    config: AdamWConfig,
    step_index: int,
    lr: float | None = None,
) -> tuple[Tensors, AdamWState]:
    """One AdamW update; inputs are left untouched.

    Args:
        params: Parameter tensors.
        grads: Gradients, one per tensor and of the same shape.
        state: Moments from the previous step.
        config: Hyperparameters.
        step_index: 1-based step count used for bias correction.
        lr: Scheduled learning rate; ``config.lr`` when omitted.

    Raises:
        StateError: params, grads and state do not line up.
    """
    if step_index < 1:
        raise InvalidArgumentError(f"step_index starts at 1, got {step_index}")
    if not len(params) == len(grads) == len(state.m) == len(state.v):
        raise StateError(
            f"{len(params)} params, {len(grads)} grads, {len(state.m)} moment tensors"
        )
    rate = config.lr if lr is None else lr
    b1, b2 = config.beta1, config.beta2
    correction1 = 1.0 - b1**step_index
    correction2 = 1.0 - b2**step_index

    new_params: Tensors = []
    new_m: Tensors = []
    new_v: Tensors = []
    for idx, (theta, g, m, v) in enumerate(zip(params, grads, state.m, state.v, strict=True)):
        if not theta.shape == g.shape == m.shape == v.shape:
            raise StateError(f"tensor {idx}: shapes {theta.shape}, {g.shape}, {m.shape}, {v.shape}")
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * g * g
        decayed = theta - rate * config.weight_decay * theta
        step = (m / correction1) / (np.sqrt(v / correction2) + config.eps)
        new_params.append(decayed - rate * step)
        new_m.append(m)
        new_v.append(v)
    return new_params, AdamWState(m=new_m, v=new_v)


def lr_at(epoch: int, config: AdamWConfig) -> float:
    """lr·γ^⌊epoch/step_every⌋ for a 0-based epoch."""
    if epoch < 0:
        raise InvalidArgumentError(f"epoch must be >= 0, got {epoch}")
    return config.lr * config.step_gamma ** (epoch // config.step_every)
