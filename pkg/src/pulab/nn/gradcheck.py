"""Finite-difference verification of the autodiff engine."""

from __future__ import annotations

from typing import Callable

from ..errors import UsageError
from .autograd import Tensor
from .network import NetworkSpec, ParamStore


def grad_check(
    spec: NetworkSpec,
    params: ParamStore,
    loss_builder: Callable[[ParamStore], Tensor],
    h: float = 1e-5,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    `loss_builder` must map the store to a scalar loss deterministically
    (fix dropout rngs per call, use update_stats=False in forwards). Two
    evaluations are compared first; any difference raises UsageError. The
    relative error per component is |a - n| / max(|a|, |n|, 1e-8).
    """
    v1 = float(loss_builder(params).data)
    v2 = float(loss_builder(params).data)
    if v1 != v2:
        raise UsageError(f"loss_builder is not deterministic: {v1!r} != {v2!r}")

    params.clear_grads()
    loss_builder(params).backward()
    analytic = {name: params.grad_of(name).reshape(-1).copy() for name in params.params}
    params.clear_grads()

    worst = 0.0
    for name, p in params.params.items():
        flat = p.value.reshape(-1)
        a = analytic[name]
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            f_plus = float(loss_builder(params).data)
            flat[i] = orig - h
            f_minus = float(loss_builder(params).data)
            flat[i] = orig
            numeric = (f_plus - f_minus) / (2.0 * h)
            err = abs(a[i] - numeric) / max(abs(a[i]), abs(numeric), 1e-8)
            worst = max(worst, err)
    return worst
