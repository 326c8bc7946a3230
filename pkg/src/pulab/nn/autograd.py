"""Reverse-mode autodiff over the fixed op set the trainers need.

Ops build a graph of `Tensor` nodes; `Tensor.backward()` walks it once in
reverse topological order and accumulates gradients into every reachable
node that wants one. The op set is intentionally closed: dense layers, the
three activations, dropout, feature-wise batch normalization, scalar add and
scale, and binary cross-entropy. The per-element math lives in the kernel
backend (`pulab._kernels`), which is either compiled Cython or numpy.
"""

from __future__ import annotations

import numpy as np

from .. import _kernels as K
from ..errors import InvalidSpecError, UsageError

BCE_EPS = 1e-7


class Tensor:
    """A dense f64 array plus an optional gradient and graph linkage.

    Leaves created with ``requires_grad=True`` receive accumulated gradients
    on backward; constants (the default) are ignored by the graph walk.
    """

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_bwd", "_backward_ran")

    def __init__(self, data, requires_grad=False, _parents=(), _bwd=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = requires_grad
        self._parents = _parents
        self._bwd = _bwd
        self._backward_ran = False

    @property
    def shape(self):
        return self.data.shape

    def item(self) -> float:
        return float(self.data)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, grad={'set' if self.grad is not None else 'none'})"

    def backward(self) -> None:
        """Populate gradients of every tracked node reachable from this scalar.

        Raises UsageError when called on a graphless tensor, a non-scalar, or
        a second time on the same root.
        """
        if self._backward_ran:
            raise UsageError("backward() already ran for this graph; run a new forward pass")
        if not self._parents:
            raise UsageError("backward() called on a tensor with no computation graph")
        if self.data.size != 1:
            raise UsageError(f"backward() needs a scalar, got shape {self.data.shape}")
        self.grad = np.ones_like(self.data)
        for node in reversed(_toposort(self)):
            if node._bwd is not None:
                node._bwd(node.grad)
        self._backward_ran = True


def _tracked(t: Tensor) -> bool:
    return t.requires_grad or bool(t._parents)


def _toposort(root: Tensor):
    order = []
    visited = {id(root)}
    stack = [(root, iter(root._parents))]
    while stack:
        node, parents = stack[-1]
        for p in parents:
            if id(p) not in visited and _tracked(p):
                visited.add(id(p))
                stack.append((p, iter(p._parents)))
                break
        else:
            order.append(node)
            stack.pop()
    return order


def _accumulate(t: Tensor, g) -> None:
    if not _tracked(t):
        return
    if t.grad is None:
        # Copy: upstream buffers may be shared between parents (e.g. add).
        t.grad = np.array(g, dtype=np.float64)
    else:
        t.grad += g


def dense(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    y = K.dense_fwd(x.data, w.data, b.data)
    if not (_tracked(x) or _tracked(w)):
        return Tensor(y)
    out = Tensor(y, _parents=(x, w, b))

    def bwd(gy):
        gx, gw, gb = K.dense_bwd(x.data, w.data, gy, _tracked(x), _tracked(w) or _tracked(b))
        if gx is not None:
            _accumulate(x, gx)
        if gw is not None:
            _accumulate(w, gw)
            _accumulate(b, gb)

    out._bwd = bwd
    return out


def relu(x: Tensor) -> Tensor:
    y = K.relu_fwd(x.data)
    if not _tracked(x):
        return Tensor(y)
    out = Tensor(y, _parents=(x,))
    out._bwd = lambda gy: _accumulate(x, K.relu_bwd(x.data, gy))
    return out


def leaky_relu(x: Tensor, slope: float) -> Tensor:
    y = K.leaky_relu_fwd(x.data, slope)
    if not _tracked(x):
        return Tensor(y)
    out = Tensor(y, _parents=(x,))
    out._bwd = lambda gy: _accumulate(x, K.leaky_relu_bwd(x.data, slope, gy))
    return out


def sigmoid(x: Tensor) -> Tensor:
    y = K.sigmoid_fwd(x.data)
    if not _tracked(x):
        return Tensor(y)
    out = Tensor(y, _parents=(x,))
    out._bwd = lambda gy: _accumulate(x, K.sigmoid_bwd(y, gy))
    return out


def dropout(x: Tensor, mask: np.ndarray, keep: float) -> Tensor:
    """Inverted dropout with a caller-supplied boolean mask."""
    scale_ = 1.0 / keep
    y = np.where(mask, x.data * scale_, 0.0)
    if not _tracked(x):
        return Tensor(y)
    out = Tensor(y, _parents=(x,))
    out._bwd = lambda gy: _accumulate(x, np.where(mask, gy * scale_, 0.0))
    return out


def batchnorm_train(x: Tensor, gamma: Tensor, beta: Tensor, eps: float):
    """Feature-wise batch normalization (training statistics).

    Returns (out, batch_mean, batch_var); the caller owns the running-stat
    update. Variance is the biased batch variance.
    """
    xd = x.data
    n = xd.shape[0]
    mu = xd.mean(axis=0)
    var = xd.var(axis=0)
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = (xd - mu) * inv_std
    y = gamma.data * xhat + beta.data
    if not (_tracked(x) or _tracked(gamma)):
        return Tensor(y), mu, var
    out = Tensor(y, _parents=(x, gamma, beta))

    def bwd(gy):
        _accumulate(gamma, (gy * xhat).sum(axis=0))
        _accumulate(beta, gy.sum(axis=0))
        if _tracked(x):
            dxhat = gy * gamma.data
            gx = (inv_std / n) * (
                n * dxhat - dxhat.sum(axis=0) - xhat * (dxhat * xhat).sum(axis=0)
            )
            _accumulate(x, gx)

    out._bwd = bwd
    return out, mu, var


def scale(x: Tensor, c: float) -> Tensor:
    """Multiply by a constant (gradient passes through scaled)."""
    y = x.data * c
    if not _tracked(x):
        return Tensor(y)
    out = Tensor(y, _parents=(x,))
    out._bwd = lambda gy: _accumulate(x, gy * c)
    return out


def add(a: Tensor, b: Tensor) -> Tensor:
    if a.data.shape != b.data.shape:
        raise InvalidSpecError(f"add: shape mismatch {a.data.shape} vs {b.data.shape}")
    y = a.data + b.data
    if not (_tracked(a) or _tracked(b)):
        return Tensor(y)
    out = Tensor(y, _parents=(a, b))

    def bwd(gy):
        _accumulate(a, gy)
        _accumulate(b, gy)

    out._bwd = bwd
    return out


def bce(yhat: Tensor, target, weight=None) -> Tensor:
    """Mean binary cross-entropy -t*log(p) - (1-t)*log(1-p) over the batch.

    `target` is a scalar 0/1 broadcast over the batch or an array of 0/1
    values matching yhat. Probabilities are clipped to [BCE_EPS, 1-BCE_EPS]
    before the logs. Optional `weight` multiplies each sample's term.
    """
    p = yhat.data.reshape(-1)
    t = np.asarray(target, dtype=np.float64)
    if t.ndim == 0:
        t = np.full(p.shape, float(t))
    else:
        t = t.reshape(-1)
        if t.shape != p.shape:
            raise InvalidSpecError(f"bce: target shape {t.shape} does not match {p.shape}")
    if not np.all((t == 0.0) | (t == 1.0)):
        raise InvalidSpecError("bce: targets must be exactly 0 or 1")
    t = np.ascontiguousarray(t)
    w = None if weight is None else np.ascontiguousarray(np.asarray(weight, dtype=np.float64).reshape(-1))
    if w is not None and w.shape != p.shape:
        raise InvalidSpecError(f"bce: weight shape {w.shape} does not match {p.shape}")
    p = np.ascontiguousarray(p)
    loss = K.bce_fwd(p, t, w, BCE_EPS)
    if not _tracked(yhat):
        return Tensor(loss)
    out = Tensor(loss, _parents=(yhat,))

    def bwd(gy):
        gp = K.bce_bwd(p, t, w, BCE_EPS, float(gy))
        _accumulate(yhat, gp.reshape(yhat.data.shape))

    out._bwd = bwd
    return out
