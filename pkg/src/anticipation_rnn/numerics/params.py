"""Named parameter store with paired gradient buffers.

One training thread owns and mutates a store; inference shares read-only
snapshots published with :meth:`ParameterStore.snapshot`.
"""

from __future__ import annotations

import numpy as np

from ..errors import InvalidInputError
from .autograd import Var


class Param(Var):
    """A leaf Var whose gradient accumulates across backward passes."""

    __slots__ = ()

    def __init__(self, name: str, value: np.ndarray):
        value = np.array(value, dtype=np.float64)
        super().__init__(value, grad=np.zeros_like(value), name=name)


class ParameterStore:
    """Ordered map of name -> Param; iteration order is insertion order."""

    def __init__(self):
        self._params: dict[str, Param] = {}

    def add(self, name: str, value) -> Param:
        if name in self._params:
            raise InvalidInputError(f"duplicate parameter name {name!r}")
        p = Param(name, value)
        self._params[name] = p
        return p

    def __getitem__(self, name: str) -> Param:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __len__(self) -> int:
        return len(self._params)

    def names(self) -> list[str]:
        return list(self._params)

    def params(self) -> list[Param]:
        return list(self._params.values())

    def num_scalars(self) -> int:
        return sum(p.value.size for p in self._params.values())

    def zero_grad(self) -> None:
        for p in self._params.values():
            p.grad.fill(0.0)

    def snapshot(self) -> dict[str, np.ndarray]:
        """Copy-on-publish: read-only copies safe to share across threads."""
        out = {}
        for name, p in self._params.items():
            arr = p.value.copy()
            arr.flags.writeable = False
            out[name] = arr
        return out

    def load_values(self, values: dict[str, np.ndarray]) -> None:
        missing = set(self._params) - set(values)
        if missing:
            raise InvalidInputError(f"missing parameters: {sorted(missing)}")
        for name, p in self._params.items():
            arr = np.asarray(values[name], dtype=np.float64)
            if arr.shape != p.value.shape:
                raise InvalidInputError(
                    f"shape mismatch for {name!r}: {arr.shape} vs {p.value.shape}"
                )
            p.value[...] = arr

    def grad_global_norm(self) -> float:
        total = 0.0
        for p in self._params.values():
            total += float((p.grad * p.grad).sum())
        return float(np.sqrt(total))

    def clip_grad_global_norm(self, max_norm: float) -> float:
        """Scale all gradients so the global norm is at most max_norm."""
        norm = self.grad_global_norm()
        if norm > max_norm > 0:
            factor = max_norm / norm
            for p in self._params.values():
                p.grad *= factor
        return norm
