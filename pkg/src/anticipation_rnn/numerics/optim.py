"""Adam optimizer over a ParameterStore."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidInputError
from .params import ParameterStore


@dataclass
class AdamState:
    """First/second moment buffers plus step count for one store."""

    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if not (self.learning_rate > 0 and 0 < self.beta1 < 1 and 0 < self.beta2 < 1 and self.epsilon > 0):
            raise InvalidInputError("invalid Adam hyperparameters")


def adam_step(store: ParameterStore, state: AdamState) -> None:
    """Standard bias-corrected Adam update; gradients are left untouched.

    Aborts without touching any parameter if some gradient is non-finite,
    naming the offending parameter.
    """
    for p in store.params():
        if not np.all(np.isfinite(p.grad)):
            raise InvalidInputError(f"non-finite gradient for parameter {p.name!r}")

    state.step += 1
    t = state.step
    b1, b2 = state.beta1, state.beta2
    bc1 = 1.0 - b1**t
    bc2 = 1.0 - b2**t
    for p in store.params():
        m = state.m.get(p.name)
        if m is None:
            m = state.m[p.name] = np.zeros_like(p.value)
        v = state.v.get(p.name)
        if v is None:
            v = state.v[p.name] = np.zeros_like(p.value)
        m *= b1
        m += (1.0 - b1) * p.grad
        v *= b2
        v += (1.0 - b2) * (p.grad * p.grad)
        p.value -= state.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + state.epsilon)
