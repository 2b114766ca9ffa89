"""Reverse-mode gradients over a recorded computation graph.

A :class:`Var` wraps a float64 array plus the recipe for propagating a
gradient to its parents. Building ops records the graph; :func:`backward`
walks it once in reverse topological order. Intermediate gradients live in a
per-call buffer, so repeated backward passes over the same graph add into
parameter ``.grad`` arrays exactly (two passes double one pass, bit for bit).

The LSTM cell is a single fused node backed by the kernels package; per-layer
matrix products stay as individual matmul nodes so BLAS does the heavy work.
"""

from __future__ import annotations

import numpy as np

from .. import kernels
from ..errors import InvalidInputError, StateError


class Var:
    """Node in the recorded computation graph.

    ``parents`` and ``vjp`` describe how to push a gradient backward:
    ``vjp(grad_out)`` returns one gradient array per parent. Leaves created
    with a ``grad`` buffer (parameters) accumulate into it during backward;
    other leaves are constants.
    """

    __slots__ = ("value", "parents", "vjp", "grad", "name")

    def __init__(self, value, parents=(), vjp=None, grad=None, name=None):
        self.value = np.asarray(value, dtype=np.float64)
        self.parents = parents
        self.vjp = vjp
        self.grad = grad
        self.name = name

    def __repr__(self):
        tag = f" {self.name!r}" if self.name else ""
        return f"<Var{tag} shape={self.value.shape}>"


def constant(value) -> Var:
    return Var(value)


def _topo_order(root: Var) -> list[Var]:
    order: list[Var] = []
    seen: set[int] = set()
    stack: list[tuple[Var, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            if id(p) not in seen:
                stack.append((p, False))
    return order


def backward(loss: Var) -> None:
    """Accumulate d(loss)/d(param) into every parameter reachable from loss."""
    if loss.value.shape != ():
        raise StateError("backward expects a scalar loss node")
    if not np.isfinite(loss.value):
        raise StateError("backward on a non-finite loss")

    order = _topo_order(loss)
    grads: dict[int, np.ndarray] = {id(loss): np.ones((), dtype=np.float64)}
    for node in reversed(order):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if node.grad is not None:
            node.grad += g
        if node.vjp is None:
            continue
        parent_grads = node.vjp(g)
        for parent, pg in zip(node.parents, parent_grads):
            if pg is None:
                continue
            buf = grads.get(id(parent))
            if buf is None:
                # Stored buffers are mutated by later += contributions, so
                # never store an array that aliases g or another buffer.
                if pg is g or pg.base is not None:
                    pg = pg.copy()
                grads[id(parent)] = pg
            else:
                buf += pg


# ---------------------------------------------------------------------------
# Op library (just what the model and its tests need)
# ---------------------------------------------------------------------------


def matmul(a: Var, b: Var) -> Var:
    def vjp(g):
        return g @ b.value.T, a.value.T @ g

    return Var(a.value @ b.value, (a, b), vjp)


def add(a: Var, b: Var) -> Var:
    """a + b where b is either a's shape or a 1-D bias broadcast over rows."""
    bias = b.value.ndim == 1 and a.value.ndim == 2

    def vjp(g):
        return g, g.sum(axis=0) if bias else g

    return Var(a.value + b.value, (a, b), vjp)


def mul(a: Var, b: Var) -> Var:
    def vjp(g):
        return g * b.value, g * a.value

    return Var(a.value * b.value, (a, b), vjp)


def scale(a: Var, c: float) -> Var:
    def vjp(g):
        return (g * c,)

    return Var(a.value * c, (a,), vjp)


def hadamard_const(a: Var, mask: np.ndarray) -> Var:
    """Elementwise product with a non-differentiated array (dropout masks)."""

    def vjp(g):
        return (g * mask,)

    return Var(a.value * mask, (a,), vjp)


def rows(table: Var, idx: np.ndarray) -> Var:
    """Gather rows of an embedding table; backward scatter-adds."""
    idx = np.asarray(idx)

    def vjp(g):
        gt = np.zeros_like(table.value)
        np.add.at(gt, idx, g)
        return (gt,)

    return Var(table.value[idx], (table,), vjp)


def concat_cols(a: Var, b: Var) -> Var:
    na = a.value.shape[1]

    def vjp(g):
        return g[:, :na], g[:, na:]

    return Var(np.concatenate([a.value, b.value], axis=1), (a, b), vjp)


def slice_cols(a: Var, j0: int, j1: int) -> Var:
    def vjp(g):
        ga = np.zeros_like(a.value)
        ga[:, j0:j1] = g
        return (ga,)

    return Var(a.value[:, j0:j1], (a,), vjp)


def stack_rows(parts: list[Var]) -> Var:
    """Concatenate along axis 0; backward splits the gradient back."""
    sizes = [p.value.shape[0] for p in parts]
    offsets = np.cumsum([0] + sizes)

    def vjp(g):
        return tuple(g[offsets[k] : offsets[k + 1]] for k in range(len(parts)))

    return Var(np.concatenate([p.value for p in parts], axis=0), tuple(parts), vjp)


def lstm_cell(preact: Var, c_prev: Var) -> Var:
    """Fused LSTM cell step; returns h and c packed as one (B, 2H) node."""
    h, c, gates = kernels.lstm_cell_forward(preact.value, c_prev.value)
    hdim = c.shape[1]

    def vjp(g):
        d_preact, d_c_prev = kernels.lstm_cell_backward(
            np.ascontiguousarray(g[:, :hdim]),
            np.ascontiguousarray(g[:, hdim:]),
            gates,
            c_prev.value,
            c,
        )
        return d_preact, d_c_prev

    return Var(np.concatenate([h, c], axis=1), (preact, c_prev), vjp)


def vsum(a: Var) -> Var:
    shape = a.value.shape

    def vjp(g):
        return (np.broadcast_to(g, shape).astype(np.float64, copy=True),)

    return Var(a.value.sum(), (a,), vjp)


def softmax_xent(logits: Var, targets: np.ndarray, valid: np.ndarray) -> Var:
    """Mean negative log-likelihood over valid positions, fused with softmax.

    logits: (M, V); targets: (M,) int ids; valid: (M,) bool. Invalid rows
    contribute nothing to the loss or the gradient.
    """
    targets = np.asarray(targets)
    valid = np.asarray(valid, dtype=bool)
    if targets.shape[0] != logits.value.shape[0] or valid.shape[0] != targets.shape[0]:
        raise InvalidInputError("logits, targets and valid must agree on rows")
    count = int(valid.sum())
    if count == 0:
        raise InvalidInputError("no valid positions in batch")

    z = logits.value - logits.value.max(axis=1, keepdims=True)
    e = np.exp(z)
    probs = e / e.sum(axis=1, keepdims=True)
    m = np.arange(targets.shape[0])
    logp = z[m, targets] - np.log(e.sum(axis=1))
    loss = -logp[valid].sum() / count

    def vjp(g):
        d = probs.copy()
        d[m, targets] -= 1.0
        d[~valid] = 0.0
        d *= float(g) / count
        return (d,)

    out = Var(loss, (logits,), vjp)
    out.name = "softmax_xent"
    return out
