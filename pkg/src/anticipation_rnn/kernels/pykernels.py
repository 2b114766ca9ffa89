"""Pure-NumPy LSTM cell kernels.

Reference implementation of the hot per-timestep math. The compiled module
``_core`` implements the same two functions with identical signatures and
semantics; parity between the two backends is enforced by tests.

Gate layout inside a pre-activation matrix of width 4H is ``[i | f | g | o]``
(input gate, forget gate, candidate, output gate).
"""

import numpy as np

BACKEND = "python"


def lstm_cell_forward(preact: np.ndarray, c_prev: np.ndarray):
    """One LSTM cell step for a batch.

    preact: (B, 4H) gate pre-activations (x @ Wx + h_prev @ Wh + b).
    c_prev: (B, H) previous cell state.

    Returns (h, c, gates) where gates is the (B, 4H) post-activation
    [i | f | g | o] block cached for the backward pass.
    """
    hdim = c_prev.shape[1]
    gates = np.empty_like(preact)
    # sigmoid on i, f, o; tanh on g
    gates[:, :hdim] = 1.0 / (1.0 + np.exp(-preact[:, :hdim]))
    gates[:, hdim : 2 * hdim] = 1.0 / (1.0 + np.exp(-preact[:, hdim : 2 * hdim]))
    gates[:, 2 * hdim : 3 * hdim] = np.tanh(preact[:, 2 * hdim : 3 * hdim])
    gates[:, 3 * hdim :] = 1.0 / (1.0 + np.exp(-preact[:, 3 * hdim :]))

    i = gates[:, :hdim]
    f = gates[:, hdim : 2 * hdim]
    g = gates[:, 2 * hdim : 3 * hdim]
    o = gates[:, 3 * hdim :]
    c = f * c_prev + i * g
    h = o * np.tanh(c)
    return h, c, gates


def lstm_cell_backward(
    d_h: np.ndarray,
    d_c: np.ndarray,
    gates: np.ndarray,
    c_prev: np.ndarray,
    c: np.ndarray,
):
    """Backward of :func:`lstm_cell_forward`.

    d_h, d_c: (B, H) gradients flowing into h and c of this step.
    gates, c_prev, c: cached forward values.

    Returns (d_preact, d_c_prev).
    """
    hdim = c_prev.shape[1]
    i = gates[:, :hdim]
    f = gates[:, hdim : 2 * hdim]
    g = gates[:, 2 * hdim : 3 * hdim]
    o = gates[:, 3 * hdim :]

    tanh_c = np.tanh(c)
    d_o = d_h * tanh_c
    d_ct = d_c + d_h * o * (1.0 - tanh_c * tanh_c)

    d_preact = np.empty_like(gates)
    d_preact[:, :hdim] = d_ct * g * i * (1.0 - i)
    d_preact[:, hdim : 2 * hdim] = d_ct * c_prev * f * (1.0 - f)
    d_preact[:, 2 * hdim : 3 * hdim] = d_ct * i * (1.0 - g * g)
    d_preact[:, 3 * hdim :] = d_o * o * (1.0 - o)
    d_c_prev = d_ct * f
    return d_preact, d_c_prev
