"""Layer descriptors, parameter stores, initialization, and the forward pass.

A network is a `NetworkSpec` (ordered layer descriptors) plus a `ParamStore`
(named parameters with Adam state). The forward pass builds an autodiff
graph in train mode and runs pure numpy in eval mode.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from . import autograd as ag
from .autograd import Tensor
from ..errors import InvalidSpecError, NumericError, UsageError

SN_SIGMA_FLOOR = 1e-12


@dataclass(frozen=True)
class Dense:
    in_dim: int
    out_dim: int
    spectral_norm: bool = False


@dataclass(frozen=True)
class Activation:
    kind: str  # "relu" | "leaky_relu" | "sigmoid"
    slope: float = 0.2  # leaky_relu only

    KINDS = ("relu", "leaky_relu", "sigmoid")


@dataclass(frozen=True)
class Dropout:
    rate: float = 0.5


@dataclass(frozen=True)
class Normalize:
    """Feature-wise batch statistics with running estimates for eval."""

    momentum: float = 0.9
    eps: float = 1e-5


Layer = Union[Dense, Activation, Dropout, Normalize]


@dataclass(frozen=True)
class NetworkSpec:
    layers: tuple

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        denses = [l for l in self.layers if isinstance(l, Dense)]
        if not denses:
            raise InvalidSpecError("a network needs at least one dense layer")
        width = None
        for i, layer in enumerate(self.layers):
            if isinstance(layer, Dense):
                if layer.in_dim < 1 or layer.out_dim < 1:
                    raise InvalidSpecError(f"layer {i}: dense dims must be positive")
                if width is not None and layer.in_dim != width:
                    raise InvalidSpecError(
                        f"layer {i}: dense in_dim {layer.in_dim} does not chain with previous width {width}"
                    )
                width = layer.out_dim
            elif isinstance(layer, Activation):
                if layer.kind not in Activation.KINDS:
                    raise InvalidSpecError(f"layer {i}: unknown activation {layer.kind!r}")
            elif isinstance(layer, Dropout):
                if not (0.0 < layer.rate < 1.0):
                    raise InvalidSpecError(f"layer {i}: dropout rate must be in (0,1)")
            elif not isinstance(layer, Normalize):
                raise InvalidSpecError(f"layer {i}: unknown layer type {type(layer).__name__}")

    @property
    def in_dim(self) -> int:
        return next(l for l in self.layers if isinstance(l, Dense)).in_dim

    @property
    def out_dim(self) -> int:
        return [l for l in self.layers if isinstance(l, Dense)][-1].out_dim

    def ends_with_sigmoid(self) -> bool:
        last = self.layers[-1]
        return isinstance(last, Activation) and last.kind == "sigmoid"


def classifier_spec(spec: NetworkSpec) -> NetworkSpec:
    """Validate that `spec` is usable as a probability-output classifier."""
    if not spec.ends_with_sigmoid():
        raise InvalidSpecError("classifier networks must end with a sigmoid activation")
    return spec


@dataclass
class Param:
    value: np.ndarray
    m: np.ndarray
    v: np.ndarray
    step: int = 0
    sn_u: Optional[np.ndarray] = None
    leaf: Tensor = field(init=False)

    def __post_init__(self):
        self.leaf = Tensor(self.value, requires_grad=True)
        self.leaf.data = self.value  # share the buffer so optimizer updates are seen


class ParamStore:
    """Named parameters with Adam moments, plus non-trained buffers.

    Buffers hold the running statistics of Normalize layers; they are not
    touched by the optimizer.
    """

    def __init__(self):
        self.params: dict[str, Param] = {}
        self.buffers: dict[str, np.ndarray] = {}

    def add(self, name: str, value: np.ndarray, sn_u: Optional[np.ndarray] = None) -> None:
        value = np.ascontiguousarray(value, dtype=np.float64)
        if sn_u is not None:
            sn_u = np.ascontiguousarray(sn_u, dtype=np.float64)
        self.params[name] = Param(
            value=value, m=np.zeros_like(value), v=np.zeros_like(value), sn_u=sn_u
        )

    def grad_of(self, name: str) -> np.ndarray:
        """Gradient of a parameter; zeros when nothing reached it."""
        p = self.params[name]
        g = p.leaf.grad
        return np.zeros_like(p.value) if g is None else g

    def clear_grads(self) -> None:
        for p in self.params.values():
            p.leaf.grad = None

    def clone(self) -> "ParamStore":
        out = ParamStore()
        for name, p in self.params.items():
            out.add(name, p.value.copy(), None if p.sn_u is None else p.sn_u.copy())
            out.params[name].m = p.m.copy()
            out.params[name].v = p.v.copy()
            out.params[name].step = p.step
        out.buffers = {k: v.copy() for k, v in self.buffers.items()}
        return out

    def load(self, other: "ParamStore") -> None:
        """Overwrite all state in place from `other` (shapes must match)."""
        if set(self.params) != set(other.params) or set(self.buffers) != set(other.buffers):
            raise UsageError("parameter stores do not describe the same network")
        for name, p in self.params.items():
            q = other.params[name]
            p.value[...] = q.value
            p.m[...] = q.m
            p.v[...] = q.v
            p.step = q.step
            if p.sn_u is not None:
                p.sn_u[...] = q.sn_u
            p.leaf.grad = None
        for name in self.buffers:
            self.buffers[name][...] = other.buffers[name]


def _init_scheme(spec: NetworkSpec, idx: int) -> str:
    """He-uniform for dense layers feeding (leaky) ReLU, Xavier otherwise."""
    for layer in spec.layers[idx + 1 :]:
        if isinstance(layer, Activation):
            return "he" if layer.kind in ("relu", "leaky_relu") else "xavier"
        if isinstance(layer, Dense):
            break
    return "xavier"


def _feeds_normalize(spec: NetworkSpec, idx: int) -> bool:
    return idx + 1 < len(spec.layers) and isinstance(spec.layers[idx + 1], Normalize)


def init_params(spec: NetworkSpec, rng: np.random.Generator) -> ParamStore:
    """Fresh parameters: uniform weights, zero biases, zeroed Adam state.

    Draw order is fixed (per layer: weight, then the spectral-norm vector),
    so a given generator state always yields a bit-identical store. A dense
    layer feeding a Normalize layer gets no bias parameter: the following
    shift (beta) makes it exactly redundant.
    """
    store = ParamStore()
    for idx, layer in enumerate(spec.layers):
        if isinstance(layer, Dense):
            if _init_scheme(spec, idx) == "he":
                limit = np.sqrt(6.0 / layer.in_dim)
            else:
                limit = np.sqrt(6.0 / (layer.in_dim + layer.out_dim))
            w = rng.uniform(-limit, limit, size=(layer.in_dim, layer.out_dim))
            sn_u = None
            if layer.spectral_norm:
                u = rng.standard_normal(layer.in_dim)
                sn_u = u / np.linalg.norm(u)
            store.add(f"layer{idx}.w", w, sn_u=sn_u)
            if not _feeds_normalize(spec, idx):
                store.add(f"layer{idx}.b", np.zeros(layer.out_dim))
        elif isinstance(layer, Normalize):
            store.add(f"layer{idx}.gamma", np.ones(_width_at(spec, idx)))
            store.add(f"layer{idx}.beta", np.zeros(_width_at(spec, idx)))
            store.buffers[f"layer{idx}.running_mean"] = np.zeros(_width_at(spec, idx))
            store.buffers[f"layer{idx}.running_var"] = np.ones(_width_at(spec, idx))
    return store


def _width_at(spec: NetworkSpec, idx: int) -> int:
    width = spec.in_dim
    for layer in spec.layers[:idx]:
        if isinstance(layer, Dense):
            width = layer.out_dim
    return width


def reinit(spec: NetworkSpec, params: ParamStore, rng: np.random.Generator) -> None:
    """Redraw `params` in place exactly as init_params would with this rng."""
    params.load(init_params(spec, rng))


def spectral_normalize(weight: np.ndarray, sn_u: np.ndarray) -> np.ndarray:
    """Divide a weight matrix by its estimated top singular value.

    One power-iteration step; `sn_u` is refined in place. The estimate is
    floored at SN_SIGMA_FLOOR so a zero matrix stays finite.
    """
    normalized, u_new, _sigma = _spectral_pass(weight, sn_u)
    sn_u[...] = u_new
    return normalized


def _spectral_pass(weight: np.ndarray, sn_u: np.ndarray):
    v = weight.T @ sn_u
    v /= max(np.linalg.norm(v), SN_SIGMA_FLOOR)
    u = weight @ v
    u /= max(np.linalg.norm(u), SN_SIGMA_FLOOR)
    sigma = max(float(u @ (weight @ v)), SN_SIGMA_FLOOR)
    return weight / sigma, u, sigma


def forward(
    spec: NetworkSpec,
    params: ParamStore,
    batch,
    mode: str = "train",
    rng: Optional[np.random.Generator] = None,
    *,
    trainable: bool = True,
    update_stats: bool = True,
) -> Tensor:
    """Run the network on a (k, in_dim) batch.

    In train mode the graph is retained so backward() can run, dropout is
    active (requires `rng`), batch statistics come from the batch, and
    running estimates plus spectral-norm vectors are refined (unless
    `update_stats=False`, which makes a train-mode forward side-effect
    free, e.g. for finite-difference checks). Eval mode is a pure function
    of (spec, params, batch): no graph, dropout is identity, stored running
    estimates are used, nothing is mutated.

    `batch` may itself be a graph-connected Tensor, in which case gradients
    flow through it; `trainable=False` keeps this network's parameters out
    of the graph so their gradients stay exactly zero.
    """
    if mode not in ("train", "eval"):
        raise UsageError(f"mode must be 'train' or 'eval', got {mode!r}")
    train = mode == "train"
    x = batch if isinstance(batch, Tensor) else Tensor(np.asarray(batch, dtype=np.float64))
    if not train:
        x = Tensor(x.data)  # eval never builds a graph
    if x.data.ndim != 2 or x.data.shape[1] != spec.in_dim:
        raise InvalidSpecError(
            f"batch shape {x.data.shape} incompatible with network input dim {spec.in_dim}"
        )

    track = train and trainable

    def param_tensor(name: str) -> Tensor:
        p = params.params[name]
        return p.leaf if track else Tensor(p.value)

    for idx, layer in enumerate(spec.layers):
        if isinstance(layer, Dense):
            w_par = params.params[f"layer{idx}.w"]
            w = param_tensor(f"layer{idx}.w")
            if f"layer{idx}.b" in params.params:
                b = param_tensor(f"layer{idx}.b")
            else:
                b = Tensor(np.zeros(layer.out_dim))
            if layer.spectral_norm:
                _, u_new, sigma = _spectral_pass(w_par.value, w_par.sn_u)
                if train and update_stats:
                    w_par.sn_u[...] = u_new
                w = ag.scale(w, 1.0 / sigma)
            x = ag.dense(x, w, b)
        elif isinstance(layer, Activation):
            if layer.kind == "relu":
                x = ag.relu(x)
            elif layer.kind == "leaky_relu":
                x = ag.leaky_relu(x, layer.slope)
            else:
                x = ag.sigmoid(x)
        elif isinstance(layer, Dropout):
            if train:
                if rng is None:
                    raise UsageError("train-mode forward through dropout needs an rng")
                mask = rng.random(x.data.shape) >= layer.rate
                x = ag.dropout(x, mask, 1.0 - layer.rate)
        elif isinstance(layer, Normalize):
            gamma = param_tensor(f"layer{idx}.gamma")
            beta = param_tensor(f"layer{idx}.beta")
            if train:
                x, mu, var = ag.batchnorm_train(x, gamma, beta, layer.eps)
                if update_stats:
                    rm = params.buffers[f"layer{idx}.running_mean"]
                    rv = params.buffers[f"layer{idx}.running_var"]
                    rm *= layer.momentum
                    rm += (1.0 - layer.momentum) * mu
                    rv *= layer.momentum
                    rv += (1.0 - layer.momentum) * var
            else:
                rm = params.buffers[f"layer{idx}.running_mean"]
                rv = params.buffers[f"layer{idx}.running_var"]
                xhat = (x.data - rm) / np.sqrt(rv + layer.eps)
                x = Tensor(gamma.data * xhat + beta.data)
        if not np.all(np.isfinite(x.data)):
            raise NumericError(f"non-finite values after layer {idx} ({type(layer).__name__})")
    return x
