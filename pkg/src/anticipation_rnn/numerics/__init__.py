"""Float64 array math: recorded-graph gradients, loss functions, Adam."""

from .autograd import (
    Var,
    add,
    backward,
    concat_cols,
    constant,
    hadamard_const,
    lstm_cell,
    matmul,
    mul,
    rows,
    scale,
    slice_cols,
    softmax_xent,
    stack_rows,
    vsum,
)
from .functions import PROB_FLOOR, cross_entropy_loss, entropy, softmax
from .gradcheck import finite_difference_check
from .optim import AdamState, adam_step
from .params import Param, ParameterStore

__all__ = [
    "Var",
    "Param",
    "ParameterStore",
    "AdamState",
    "adam_step",
    "backward",
    "finite_difference_check",
    "softmax",
    "cross_entropy_loss",
    "entropy",
    "PROB_FLOOR",
    "constant",
    "matmul",
    "add",
    "mul",
    "scale",
    "hadamard_const",
    "rows",
    "concat_cols",
    "slice_cols",
    "stack_rows",
    "lstm_cell",
    "softmax_xent",
    "vsum",
]
