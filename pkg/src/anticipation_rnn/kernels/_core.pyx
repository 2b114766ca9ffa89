# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled LSTM cell kernels.

Same contract as ``pykernels``: gate layout [i | f | g | o], float64 only.
The elementwise gate math is fused into single passes to avoid the NumPy
temporaries that dominate at small hidden sizes.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, tanh

cnp.import_array()

BACKEND = "cython"


def lstm_cell_forward(
    cnp.ndarray[cnp.float64_t, ndim=2] preact not None,
    cnp.ndarray[cnp.float64_t, ndim=2] c_prev not None,
):
    cdef Py_ssize_t B = preact.shape[0]
    cdef Py_ssize_t H = c_prev.shape[1]
    if preact.shape[1] != 4 * H or c_prev.shape[0] != B:
        raise ValueError("preact must be (B, 4H) and c_prev (B, H)")

    cdef cnp.ndarray[cnp.float64_t, ndim=2] gates = np.empty((B, 4 * H), dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] c = np.empty((B, H), dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] h = np.empty((B, H), dtype=np.float64)

    cdef double[:, ::1] pa = np.ascontiguousarray(preact)
    cdef double[:, ::1] cp = np.ascontiguousarray(c_prev)
    cdef double[:, ::1] gv = gates
    cdef double[:, ::1] cv = c
    cdef double[:, ::1] hv = h

    cdef Py_ssize_t b, j
    cdef double ig, fg, gg, og, cn
    for b in range(B):
        for j in range(H):
            ig = 1.0 / (1.0 + exp(-pa[b, j]))
            fg = 1.0 / (1.0 + exp(-pa[b, H + j]))
            gg = tanh(pa[b, 2 * H + j])
            og = 1.0 / (1.0 + exp(-pa[b, 3 * H + j]))
            cn = fg * cp[b, j] + ig * gg
            gv[b, j] = ig
            gv[b, H + j] = fg
            gv[b, 2 * H + j] = gg
            gv[b, 3 * H + j] = og
            cv[b, j] = cn
            hv[b, j] = og * tanh(cn)
    return h, c, gates


def lstm_cell_backward(
    cnp.ndarray[cnp.float64_t, ndim=2] d_h not None,
    cnp.ndarray[cnp.float64_t, ndim=2] d_c not None,
    cnp.ndarray[cnp.float64_t, ndim=2] gates not None,
    cnp.ndarray[cnp.float64_t, ndim=2] c_prev not None,
    cnp.ndarray[cnp.float64_t, ndim=2] c not None,
):
    cdef Py_ssize_t B = d_h.shape[0]
    cdef Py_ssize_t H = d_h.shape[1]
    if gates.shape[1] != 4 * H:
        raise ValueError("gates must be (B, 4H)")

    cdef cnp.ndarray[cnp.float64_t, ndim=2] d_preact = np.empty((B, 4 * H), dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] d_c_prev = np.empty((B, H), dtype=np.float64)

    cdef double[:, ::1] dh = np.ascontiguousarray(d_h)
    cdef double[:, ::1] dc = np.ascontiguousarray(d_c)
    cdef double[:, ::1] gv = np.ascontiguousarray(gates)
    cdef double[:, ::1] cp = np.ascontiguousarray(c_prev)
    cdef double[:, ::1] cv = np.ascontiguousarray(c)
    cdef double[:, ::1] dpa = d_preact
    cdef double[:, ::1] dcp = d_c_prev

    cdef Py_ssize_t b, j
    cdef double ig, fg, gg, og, tc, d_o, d_ct
    for b in range(B):
        for j in range(H):
            ig = gv[b, j]
            fg = gv[b, H + j]
            gg = gv[b, 2 * H + j]
            og = gv[b, 3 * H + j]
            tc = tanh(cv[b, j])
            d_o = dh[b, j] * tc
            d_ct = dc[b, j] + dh[b, j] * og * (1.0 - tc * tc)
            dpa[b, j] = d_ct * gg * ig * (1.0 - ig)
            dpa[b, H + j] = d_ct * cp[b, j] * fg * (1.0 - fg)
            dpa[b, 2 * H + j] = d_ct * ig * (1.0 - gg * gg)
            dpa[b, 3 * H + j] = d_o * og * (1.0 - og)
            dcp[b, j] = d_ct * fg
    return d_preact, d_c_prev
