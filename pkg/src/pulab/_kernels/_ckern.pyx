# Compiled kernel backend: the hot per-layer math as typed C loops.
#
# Every reduction runs in a fixed order, so outputs are bit-identical run to
# run regardless of thread counts (everything here is single-threaded).
# Function surface matches _pykern.py exactly.

import numpy as np

from libc.math cimport exp, log, sqrt

BACKEND = "compiled"


def dense_fwd(double[:, ::1] x, double[:, ::1] w, double[::1] b):
    cdef Py_ssize_t n = x.shape[0], d = x.shape[1], m = w.shape[1]
    out = np.empty((n, m))
    cdef double[:, ::1] y = out
    cdef Py_ssize_t i, j, k
    cdef double xv
    for i in range(n):
        for j in range(m):
            y[i, j] = b[j]
        for k in range(d):
            xv = x[i, k]
            for j in range(m):
                y[i, j] += xv * w[k, j]
    return out


def dense_bwd(double[:, ::1] x, double[:, ::1] w, double[:, ::1] gy,
              bint need_gx=True, bint need_gw=True):
    cdef Py_ssize_t n = x.shape[0], d = x.shape[1], m = w.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double acc, gv

    gx_arr = None
    gw_arr = None
    gb_arr = None
    cdef double[:, ::1] gx, gw
    cdef double[::1] gb

    if need_gx:
        gx_arr = np.empty((n, d))
        gx = gx_arr
        for i in range(n):
            for k in range(d):
                acc = 0.0
                for j in range(m):
                    acc += gy[i, j] * w[k, j]
                gx[i, k] = acc
    if need_gw:
        gw_arr = np.zeros((d, m))
        gb_arr = np.zeros(m)
        gw = gw_arr
        gb = gb_arr
        for i in range(n):
            for k in range(d):
                gv = x[i, k]
                for j in range(m):
                    gw[k, j] += gv * gy[i, j]
            for j in range(m):
                gb[j] += gy[i, j]
    return gx_arr, gw_arr, gb_arr


def relu_fwd(double[:, ::1] x):
    cdef Py_ssize_t n = x.shape[0], m = x.shape[1]
    out = np.empty((n, m))
    cdef double[:, ::1] y = out
    cdef Py_ssize_t i, j
    for i in range(n):
        for j in range(m):
            y[i, j] = x[i, j] if x[i, j] > 0.0 else 0.0
    return out


def relu_bwd(double[:, ::1] x, double[:, ::1] gy):
    cdef Py_ssize_t n = x.shape[0], m = x.shape[1]
    out = np.empty((n, m))
    cdef double[:, ::1] g = out
    cdef Py_ssize_t i, j
    for i in range(n):
        for j in range(m):
            g[i, j] = gy[i, j] if x[i, j] > 0.0 else 0.0
    return out


def leaky_relu_fwd(double[:, ::1] x, double slope):
    cdef Py_ssize_t n = x.shape[0], m = x.shape[1]
    out = np.empty((n, m))
    cdef double[:, ::1] y = out
    cdef Py_ssize_t i, j
    for i in range(n):
        for j in range(m):
            y[i, j] = x[i, j] if x[i, j] > 0.0 else slope * x[i, j]
    return out


def leaky_relu_bwd(double[:, ::1] x, double slope, double[:, ::1] gy):
    cdef Py_ssize_t n = x.shape[0], m = x.shape[1]
    out = np.empty((n, m))
    cdef double[:, ::1] g = out
    cdef Py_ssize_t i, j
    for i in range(n):
        for j in range(m):
            g[i, j] = gy[i, j] if x[i, j] > 0.0 else slope * gy[i, j]
    return out


def sigmoid_fwd(double[:, ::1] x):
    cdef Py_ssize_t n = x.shape[0], m = x.shape[1]
    out = np.empty((n, m))
    cdef double[:, ::1] y = out
    cdef Py_ssize_t i, j
    cdef double v, e
    cdef double lo = 1e-12, hi = 1.0 - 1e-12
    for i in range(n):
        for j in range(m):
            v = x[i, j]
            if v >= 0.0:
                v = 1.0 / (1.0 + exp(-v))
            else:
                e = exp(v)
                v = e / (1.0 + e)
            if v < lo:
                v = lo
            elif v > hi:
                v = hi
            y[i, j] = v
    return out


def sigmoid_bwd(double[:, ::1] y, double[:, ::1] gy):
    cdef Py_ssize_t n = y.shape[0], m = y.shape[1]
    out = np.empty((n, m))
    cdef double[:, ::1] g = out
    cdef Py_ssize_t i, j
    for i in range(n):
        for j in range(m):
            g[i, j] = gy[i, j] * y[i, j] * (1.0 - y[i, j])
    return out


def bce_fwd(double[::1] p, double[::1] t, w, double eps):
    cdef Py_ssize_t n = p.shape[0]
    cdef Py_ssize_t i
    cdef double acc = 0.0, pc, term
    cdef double lo = eps, hi = 1.0 - eps
    cdef double[::1] wv
    if w is None:
        for i in range(n):
            pc = p[i]
            if pc < lo:
                pc = lo
            elif pc > hi:
                pc = hi
            acc += -(t[i] * log(pc) + (1.0 - t[i]) * log(1.0 - pc))
    else:
        wv = w
        for i in range(n):
            pc = p[i]
            if pc < lo:
                pc = lo
            elif pc > hi:
                pc = hi
            term = -(t[i] * log(pc) + (1.0 - t[i]) * log(1.0 - pc))
            acc += wv[i] * term
    return acc / n


def bce_bwd(double[::1] p, double[::1] t, w, double eps, double gout):
    cdef Py_ssize_t n = p.shape[0]
    out = np.empty(n)
    cdef double[::1] g = out
    cdef Py_ssize_t i
    cdef double pc, gv
    cdef double lo = eps, hi = 1.0 - eps
    cdef double scale = gout / n
    cdef double[::1] wv
    cdef bint weighted = w is not None
    if weighted:
        wv = w
    for i in range(n):
        pc = p[i]
        if pc > lo and pc < hi:
            gv = (pc - t[i]) / (pc * (1.0 - pc))
        else:
            gv = 0.0
        if weighted:
            gv *= wv[i]
        g[i] = gv * scale
    return out


def adam_update(double[::1] value, double[::1] grad, double[::1] m,
                double[::1] v, long t, double lr, double beta1,
                double beta2, double eps):
    cdef Py_ssize_t n = value.shape[0]
    cdef Py_ssize_t i
    cdef double c1 = 1.0 - beta1 ** t
    cdef double c2 = 1.0 - beta2 ** t
    cdef double g
    for i in range(n):
        g = grad[i]
        m[i] = beta1 * m[i] + (1.0 - beta1) * g
        v[i] = beta2 * v[i] + (1.0 - beta2) * g * g
        value[i] -= lr * (m[i] / c1) / (sqrt(v[i] / c2) + eps)
