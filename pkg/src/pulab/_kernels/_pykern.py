"""Pure-numpy kernel backend.

Mirrors the compiled backend in `_ckern.pyx` function for function. Either
backend is deterministic on its own; the two are not guaranteed to agree in
the last floating-point bits because BLAS and the hand-rolled loops reduce
in different orders.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"


def dense_fwd(x, w, b):
    return x @ w + b


def dense_bwd(x, w, gy, need_gx=True, need_gw=True):
    gx = gy @ w.T if need_gx else None
    if need_gw:
        gw = x.T @ gy
        gb = gy.sum(axis=0)
    else:
        gw = None
        gb = None
    return gx, gw, gb


def relu_fwd(x):
    return np.maximum(x, 0.0)


def relu_bwd(x, gy):
    return np.where(x > 0.0, gy, 0.0)


def leaky_relu_fwd(x, slope):
    return np.where(x > 0.0, x, slope * x)


def leaky_relu_bwd(x, slope, gy):
    return np.where(x > 0.0, gy, slope * gy)


def sigmoid_fwd(x):
    # Split by sign to avoid overflow in exp; clamp away from exact 0/1 so
    # downstream code can rely on outputs lying strictly inside (0, 1).
    out = np.empty_like(x)
    pos = x >= 0.0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    return np.clip(out, 1e-12, 1.0 - 1e-12)


def sigmoid_bwd(y, gy):
    return gy * y * (1.0 - y)


def bce_fwd(p, t, w, eps):
    pc = np.clip(p, eps, 1.0 - eps)
    terms = -(t * np.log(pc) + (1.0 - t) * np.log(1.0 - pc))
    if w is not None:
        terms = terms * w
    return float(terms.sum() / p.shape[0])


def bce_bwd(p, t, w, eps, gout):
    pc = np.clip(p, eps, 1.0 - eps)
    inside = (p > eps) & (p < 1.0 - eps)
    g = np.where(inside, (pc - t) / (pc * (1.0 - pc)), 0.0)
    if w is not None:
        g = g * w
    return g * (gout / p.shape[0])


def adam_update(value, grad, m, v, t, lr, beta1, beta2, eps):
    """One Adam step with bias correction, in place on value/m/v.

    `t` is the step count after incrementing (1 on the first call).
    """
    m *= beta1
    m += (1.0 - beta1) * grad
    v *= beta2
    v += (1.0 - beta2) * (grad * grad)
    mhat = m / (1.0 - beta1**t)
    vhat = v / (1.0 - beta2**t)
    value -= lr * mhat / (np.sqrt(vhat) + eps)
