"""Finite-difference verification of recorded-graph gradients."""

from __future__ import annotations

import warnings
from typing import Callable

import numpy as np

from ..errors import CheckInvalidError, InvalidInputError
from .autograd import Var, backward
from .params import ParameterStore


def finite_difference_check(
    model_loss: Callable[[ParameterStore], Var],
    store: ParameterStore,
    epsilon: float = 1e-5,
    samples: int = 50,
    seed: int = 0,
) -> float:
    """Compare analytic gradients against central differences.

    Evaluates the loss twice up front to verify determinism, runs one
    backward pass, then perturbs ``samples`` randomly chosen scalar
    parameters by +/- epsilon. Returns the maximum relative error
    |analytic - numeric| / max(1e-8, |analytic| + |numeric|).

    The loss callable must be deterministic (disable dropout and fix any rng).
    """
    if not epsilon > 0:
        raise InvalidInputError("epsilon must be positive")
    if samples < 1:
        raise InvalidInputError("samples must be >= 1")

    total = store.num_scalars()
    if total == 0:
        warnings.warn("gradient check on a zero-parameter store is vacuous")
        return 0.0

    f_a = float(model_loss(store).value)
    f_b = float(model_loss(store).value)
    if f_a != f_b:
        raise CheckInvalidError("loss is not deterministic across evaluations")

    store.zero_grad()
    backward(model_loss(store))
    analytic = {p.name: p.grad.copy() for p in store.params()}

    rng = np.random.default_rng(seed)
    flat_index = rng.integers(0, total, size=samples)

    # map flat coordinates onto (param, offset)
    bounds = []
    offset = 0
    for p in store.params():
        bounds.append((offset, offset + p.value.size, p))
        offset += p.value.size

    max_rel = 0.0
    for k in flat_index:
        for lo, hi, p in bounds:
            if lo <= k < hi:
                j = int(k - lo)
                flat = p.value.reshape(-1)
                original = flat[j]
                flat[j] = original + epsilon
                f_plus = float(model_loss(store).value)
                flat[j] = original - epsilon
                f_minus = float(model_loss(store).value)
                flat[j] = original
                numeric = (f_plus - f_minus) / (2.0 * epsilon)
                a = float(analytic[p.name].reshape(-1)[j])
                rel = abs(a - numeric) / max(1e-8, abs(a) + abs(numeric))
                max_rel = max(max_rel, rel)
                break
    return max_rel
