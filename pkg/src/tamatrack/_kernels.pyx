# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops: square assignment, LSTM unroll, pairwise IoU."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, tanh, INFINITY

cnp.import_array()


def lsap_square(double[:, ::1] cost):
    """Row -> column assignment minimizing total cost on a square matrix.

    Shortest augmenting path with row/column potentials; the first column
    reaching the minimum slack wins, which makes ties deterministic.
    """
    cdef Py_ssize_t n = cost.shape[0]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] out = np.full(n, -1, dtype=np.int64)
    if n == 0:
        return out
    cdef double[::1] u = np.zeros(n + 1)
    cdef double[::1] v = np.zeros(n + 1)
    cdef double[::1] minv = np.empty(n + 1)
    cdef Py_ssize_t[::1] p = np.zeros(n + 1, dtype=np.intp)
    cdef Py_ssize_t[::1] way = np.zeros(n + 1, dtype=np.intp)
    cdef unsigned char[::1] used = np.zeros(n + 1, dtype=np.uint8)
    cdef Py_ssize_t i, j, j0, j1, i0
    cdef double delta, cur

    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        for j in range(n + 1):
            minv[j] = INFINITY
            used[j] = 0
        while True:
            used[j0] = 1
            i0 = p[j0]
            delta = INFINITY
            j1 = 0
            for j in range(1, n + 1):
                if not used[j]:
                    cur = cost[i0 - 1, j - 1] - u[i0] - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta = minv[j]
                        j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while True:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
            if j0 == 0:
                break

    for j in range(1, n + 1):
        out[p[j] - 1] = j - 1
    return out


cdef inline double _sigmoid(double x) nogil:
    return 1.0 / (1.0 + exp(-x))


def lstm_sequence(double[:, ::1] weights, double[::1] bias, double[:, ::1] seq,
                  double[::1] h0, double[::1] c0):
    """Unroll a bias-optional LSTM over ``seq`` starting from (h0, c0).

    ``weights`` stacks the forget, input, output and candidate matrices
    row-wise (4H x (H + I)); columns are ordered [hidden, input].
    """
    cdef Py_ssize_t hid = h0.shape[0]
    cdef Py_ssize_t n_in = seq.shape[1]
    cdef Py_ssize_t n_cells = seq.shape[0]
    cdef Py_ssize_t width = hid + n_in
    if weights.shape[0] != 4 * hid or weights.shape[1] != width:
        raise ValueError("weight matrix shape does not match hidden/input sizes")
    if bias.shape[0] != 4 * hid:
        raise ValueError("bias length must be 4 * hidden")

    cdef double[::1] h = np.array(h0, dtype=np.float64)
    cdef double[::1] c = np.array(c0, dtype=np.float64)
    cdef double[::1] joint = np.empty(width)
    cdef double[::1] pre = np.empty(4 * hid)
    cdef Py_ssize_t k, r, col
    cdef double a0, a1, a2, a3, f_g, i_g, o_g, cand

    for k in range(n_cells):
        for col in range(hid):
            joint[col] = h[col]
        for col in range(n_in):
            joint[hid + col] = seq[k, col]
        for r in range(4 * hid):
            # four independent partial sums break the add dependency chain
            a0 = a1 = a2 = a3 = 0.0
            col = 0
            while col + 4 <= width:
                a0 += weights[r, col] * joint[col]
                a1 += weights[r, col + 1] * joint[col + 1]
                a2 += weights[r, col + 2] * joint[col + 2]
                a3 += weights[r, col + 3] * joint[col + 3]
                col += 4
            while col < width:
                a0 += weights[r, col] * joint[col]
                col += 1
            pre[r] = ((a0 + a1) + (a2 + a3)) + bias[r]
        for r in range(hid):
            f_g = _sigmoid(pre[r])
            i_g = _sigmoid(pre[hid + r])
            o_g = _sigmoid(pre[2 * hid + r])
            cand = tanh(pre[3 * hid + r])
            c[r] = f_g * c[r] + i_g * cand
            h[r] = o_g * tanh(c[r])
    return np.asarray(h), np.asarray(c)


def iou_matrix(double[:, ::1] a, double[:, ::1] b):
    """IoU between every row of ``a`` and ``b`` (boxes as left, top, width, height)."""
    cdef Py_ssize_t n = a.shape[0], m = b.shape[0], i, j
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.zeros((n, m))
    cdef double[:, ::1] ov = out
    cdef double iw, ih, inter, union
    for i in range(n):
        for j in range(m):
            iw = min(a[i, 0] + a[i, 2], b[j, 0] + b[j, 2]) - max(a[i, 0], b[j, 0])
            ih = min(a[i, 1] + a[i, 3], b[j, 1] + b[j, 3]) - max(a[i, 1], b[j, 1])
            if iw <= 0.0 or ih <= 0.0:
                continue
            inter = iw * ih
            union = a[i, 2] * a[i, 3] + b[j, 2] * b[j, 3] - inter
            if union > 0.0:
                ov[i, j] = min(1.0, inter / union)
    return out
