"""Scalar-level probability functions: softmax, cross entropy, entropy.

All math is float64 and clamps zero probabilities to a 1e-30 floor (with a
:class:`ProbabilityFloorWarning`) instead of producing infinities.
"""

import warnings

import numpy as np

from ..errors import InvalidInputError, ProbabilityFloorWarning

PROB_FLOOR = 1e-30


def softmax(logits, temperature: float = 1.0) -> np.ndarray:
    """Stable softmax over the last axis, with temperature.

    Uses max-subtraction; output rows are valid distributions (entries in
    (0, 1], summing to 1 within 1e-12) for any finite input.
    """
    x = np.asarray(logits, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise InvalidInputError("softmax input must be finite")
    if not temperature > 0:
        raise InvalidInputError("temperature must be positive")
    z = x / temperature
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def cross_entropy_loss(dist, target: int) -> float:
    """Negative log-likelihood -ln(dist[target]) of one categorical outcome."""
    p = np.asarray(dist, dtype=np.float64)
    if p.ndim != 1:
        raise InvalidInputError("dist must be a probability vector")
    if not (0 <= target < p.shape[0]):
        raise InvalidInputError(f"target {target} outside vocabulary of size {p.shape[0]}")
    value = p[target]
    if value <= 0.0:
        warnings.warn("probability clamped to 1e-30 floor", ProbabilityFloorWarning)
        value = PROB_FLOOR
    return float(-np.log(value))


def entropy(dist) -> float:
    """Shannon entropy in nats, with the 0*log(0) = 0 convention."""
    p = np.asarray(dist, dtype=np.float64)
    nz = p[p > 0.0]
    return float(-(nz * np.log(nz)).sum())
