"""Adam with bias correction over a ParamStore."""

from __future__ import annotations

import numpy as np

from .. import _kernels as K
from ..errors import UsageError
from .network import ParamStore


def adam_step(
    params: ParamStore,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> None:
    """Apply one Adam update to every parameter and clear gradients.

    Raises UsageError when no parameter has a gradient (no backward ran).
    Parameters the last backward pass never reached count as zero-gradient;
    their moments still decay and their step count still advances.
    """
    if all(p.leaf.grad is None for p in params.params.values()):
        raise UsageError("adam_step: no gradients populated; run backward() first")
    for p in params.params.values():
        p.step += 1
        g = p.leaf.grad
        if g is None:
            g = np.zeros_like(p.value)
        K.adam_update(
            p.value.reshape(-1),
            np.ascontiguousarray(g, dtype=np.float64).reshape(-1),
            p.m.reshape(-1),
            p.v.reshape(-1),
            p.step,
            lr,
            beta1,
            beta2,
            eps,
        )
        p.leaf.grad = None
