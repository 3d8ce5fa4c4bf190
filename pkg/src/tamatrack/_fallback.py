"""Pure-Python versions of the compiled kernels in ``_kernels.pyx``.

Signatures and results match the compiled module; the solver follows the
same pivoting order so both backends return the same assignment.
"""

import math

import numpy as np


def lsap_square(cost):
    cost = np.asarray(cost, dtype=np.float64)
    n = cost.shape[0]
    out = np.full(n, -1, dtype=np.int64)
    if n == 0:
        return out
    rows = cost.tolist()
    inf = math.inf
    u = [0.0] * (n + 1)
    v = [0.0] * (n + 1)
    p = [0] * (n + 1)
    way = [0] * (n + 1)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = [inf] * (n + 1)
        used = [False] * (n + 1)
        while True:
            used[j0] = True
            i0 = p[j0]
            row = rows[i0 - 1]
            ui = u[i0]
            delta = inf
            j1 = 0
            for j in range(1, n + 1):
                if not used[j]:
                    cur = row[j - 1] - ui - v[j]
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


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def lstm_sequence(weights, bias, seq, h0, c0):
    weights = np.asarray(weights, dtype=np.float64)
    seq = np.asarray(seq, dtype=np.float64)
    hid = len(h0)
    if weights.shape != (4 * hid, hid + seq.shape[1]):
        raise ValueError("weight matrix shape does not match hidden/input sizes")
    if len(bias) != 4 * hid:
        raise ValueError("bias length must be 4 * hidden")
    h = np.array(h0, dtype=np.float64)
    c = np.array(c0, dtype=np.float64)
    for x in seq:
        pre = weights @ np.concatenate([h, x]) + bias
        f_g = _sigmoid(pre[:hid])
        i_g = _sigmoid(pre[hid:2 * hid])
        o_g = _sigmoid(pre[2 * hid:3 * hid])
        cand = np.tanh(pre[3 * hid:])
        c = f_g * c + i_g * cand
        h = o_g * np.tanh(c)
    return h, c


def iou_matrix(a, b):
    a = np.asarray(a, dtype=np.float64).reshape(-1, 4)
    b = np.asarray(b, dtype=np.float64).reshape(-1, 4)
    left = np.maximum(a[:, None, 0], b[None, :, 0])
    top = np.maximum(a[:, None, 1], b[None, :, 1])
    right = np.minimum(a[:, None, 0] + a[:, None, 2], b[None, :, 0] + b[None, :, 2])
    bottom = np.minimum(a[:, None, 1] + a[:, None, 3], b[None, :, 1] + b[None, :, 3])
    iw = np.clip(right - left, 0.0, None)
    ih = np.clip(bottom - top, 0.0, None)
    inter = iw * ih
    union = (a[:, 2] * a[:, 3])[:, None] + (b[:, 2] * b[:, 3])[None, :] - inter
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.minimum(1.0, np.where((inter > 0) & (union > 0), inter / union, 0.0))
    return out
