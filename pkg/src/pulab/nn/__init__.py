"""Minimal neural-network core: autodiff, layers, Adam, gradient checking."""

from .autograd import BCE_EPS, Tensor, add, bce, scale
from .gradcheck import grad_check
from .network import (
    Activation,
    Dense,
    Dropout,
    NetworkSpec,
    Normalize,
    Param,
    ParamStore,
    classifier_spec,
    forward,
    init_params,
    reinit,
    spectral_normalize,
)
from .optim import adam_step

__all__ = [
    "BCE_EPS",
    "Tensor",
    "add",
    "bce",
    "scale",
    "grad_check",
    "Activation",
    "Dense",
    "Dropout",
    "NetworkSpec",
    "Normalize",
    "Param",
    "ParamStore",
    "classifier_spec",
    "forward",
    "init_params",
    "reinit",
    "spectral_normalize",
    "adam_step",
]
