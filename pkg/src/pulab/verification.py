"""Finite-difference verification matrix over layer kinds and losses.

Each case freezes its batches and dropout draws so the loss is a
deterministic function of the parameters (gradients of spectrally
normalized weights are checked separately because the scale factor is a
stop-gradient by design).
"""

from __future__ import annotations

import numpy as np

from .nn import (
    Activation,
    Dense,
    Dropout,
    NetworkSpec,
    Normalize,
    forward,
    grad_check,
    init_params,
)
from .seeding import make_rng
from .training import loss_d, loss_g, loss_ob

GRADCHECK_TOL = 1e-4
GRADCHECK_STEP = 1e-5

_D_SPEC = NetworkSpec(
    (
        Dense(3, 8),
        Activation("leaky_relu", 0.2),
        Dense(8, 8),
        Activation("relu"),
        Dropout(0.5),
        Dense(8, 1),
        Activation("sigmoid"),
    )
)
_OB_SPEC = NetworkSpec(
    (
        Dense(3, 8),
        Activation("relu"),
        Dense(8, 8),
        Activation("leaky_relu", 0.2),
        Dropout(0.5),
        Dense(8, 1),
        Activation("sigmoid"),
    )
)
_G_SPEC = NetworkSpec(
    (
        Dense(4, 8),
        Normalize(),
        Activation("relu"),
        Dense(8, 8),
        Normalize(),
        Activation("leaky_relu", 0.2),
        Dense(8, 3),
    )
)


def gradcheck_suite(seed: int = 7) -> list[tuple[str, float]]:
    """Max relative finite-difference error for each loss. Layer coverage:
    dense, relu, leaky_relu, sigmoid, dropout under the two classifier
    losses; normalize (plus the frozen classifiers) under the generator
    loss."""
    root = make_rng(seed, "gradcheck/batches")
    xu = root.standard_normal((8, 3))
    xp = root.standard_normal((8, 3))
    xz_const = root.standard_normal((8, 3))
    z = root.standard_normal((8, 4))

    d_params = init_params(_D_SPEC, make_rng(seed, "gradcheck/init/d"))
    ob_params = init_params(_OB_SPEC, make_rng(seed, "gradcheck/init/ob"))
    g_params = init_params(_G_SPEC, make_rng(seed, "gradcheck/init/g"))

    def fixed_rng():
        return make_rng(seed, "gradcheck/dropout")

    def build_loss_d(params):
        rng = fixed_rng()
        d_real = forward(_D_SPEC, params, xu, "train", rng, update_stats=False)
        d_fake = forward(_D_SPEC, params, xz_const, "train", rng, update_stats=False)
        return loss_d(d_real, d_fake)

    def build_loss_ob(params):
        rng = fixed_rng()
        ob_pos = forward(_OB_SPEC, params, xp, "train", rng, update_stats=False)
        ob_fake = forward(_OB_SPEC, params, xz_const, "train", rng, update_stats=False)
        return loss_ob(ob_pos, ob_fake)

    def build_loss_g(params):
        rng = fixed_rng()
        xz = forward(_G_SPEC, params, z, "train", rng, update_stats=False)
        d_fake = forward(_D_SPEC, d_params, xz, "train", rng, trainable=False, update_stats=False)
        ob_fake = forward(_OB_SPEC, ob_params, xz, "train", rng, trainable=False, update_stats=False)
        return loss_g(d_fake, ob_fake)

    return [
        ("loss_d vs discriminator params", grad_check(_D_SPEC, d_params, build_loss_d, GRADCHECK_STEP)),
        ("loss_ob vs observer params", grad_check(_OB_SPEC, ob_params, build_loss_ob, GRADCHECK_STEP)),
        ("loss_g vs generator params", grad_check(_G_SPEC, g_params, build_loss_g, GRADCHECK_STEP)),
    ]
