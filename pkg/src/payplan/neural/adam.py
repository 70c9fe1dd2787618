"""ADAM optimizer over lists of parameter tensors.

The update is the standard descent step on the supplied gradient; callers
maximizing an objective pass the negated gradient.  Functional style: both
parameters and state are returned fresh, never mutated.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..errors import TrainingError


@dataclass(frozen=True)
class AdamState:
    m: tuple[np.ndarray, ...]  # first-moment accumulators, one per tensor
    v: tuple[np.ndarray, ...]  # second-moment accumulators
    step: int
    lr: float
    beta1: float
    beta2: float
    eps: float


def init_adam(
    arrays: list[np.ndarray],
    lr: float = 1e-3,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> AdamState:
    return AdamState(
        m=tuple(np.zeros_like(a) for a in arrays),
        v=tuple(np.zeros_like(a) for a in arrays),
        step=0,
        lr=lr,
        beta1=beta1,
        beta2=beta2,
        eps=eps,
    )


def adam_step(
    arrays: list[np.ndarray], grads: list[np.ndarray], state: AdamState
) -> tuple[list[np.ndarray], AdamState]:
    """One bias-corrected descent step; raises on non-finite gradients."""
    if len(arrays) != len(grads) or len(arrays) != len(state.m):
        raise ValueError("parameter, gradient, and state lengths must match")
    for g in grads:
        if not np.isfinite(g).all():
            raise TrainingError("non-finite gradient in ADAM step")
    t = state.step + 1
    bc1 = 1.0 - state.beta1**t
    bc2 = 1.0 - state.beta2**t
    new_arrays, new_m, new_v = [], [], []
    for a, g, m, v in zip(arrays, grads, state.m, state.v):
        m1 = state.beta1 * m + (1.0 - state.beta1) * g
        v1 = state.beta2 * v + (1.0 - state.beta2) * (g * g)
        update = state.lr * (m1 / bc1) / (np.sqrt(v1 / bc2) + state.eps)
        new_arrays.append(a - update)
        new_m.append(m1)
        new_v.append(v1)
    return new_arrays, replace(state, m=tuple(new_m), v=tuple(new_v), step=t)
