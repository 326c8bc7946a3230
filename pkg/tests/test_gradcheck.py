import numpy as np
import pytest

from pulab.errors import UsageError
from pulab.nn import Activation, Dense, NetworkSpec, Tensor, bce, forward, grad_check, init_params
from pulab.seeding import make_rng
from pulab.verification import GRADCHECK_TOL, gradcheck_suite


def test_linear_model_bce():
    spec = NetworkSpec((Dense(3, 1), Activation("sigmoid")))
    params = init_params(spec, make_rng(0, "lin"))
    x = make_rng(1, "x").standard_normal((10, 3))
    t = (make_rng(2, "t").random(10) > 0.5).astype(float)

    def builder(p):
        return bce(forward(spec, p, x, "train"), t)

    assert grad_check(spec, params, builder, 1e-5) < 1e-6


def test_constant_loss_has_zero_error():
    spec = NetworkSpec((Dense(2, 1), Activation("sigmoid")))
    params = init_params(spec, make_rng(3, "c"))

    def builder(p):
        leaf = Tensor(np.zeros((1, 1)), requires_grad=True)
        from pulab.nn.autograd import sigmoid

        return bce(sigmoid(leaf), 1.0)

    assert grad_check(spec, params, builder, 1e-5) == 0.0


def test_three_layer_leaky_net():
    spec = NetworkSpec(
        (
            Dense(4, 8),
            Activation("leaky_relu", 0.2),
            Dense(8, 8),
            Activation("leaky_relu", 0.2),
            Dense(8, 1),
            Activation("sigmoid"),
        )
    )
    params = init_params(spec, make_rng(4, "l"))
    x = make_rng(5, "x").standard_normal((12, 4))

    def builder(p):
        return bce(forward(spec, p, x, "train"), 0.0)

    assert grad_check(spec, params, builder, 1e-5) < 1e-4


def test_nondeterministic_builder_detected():
    spec = NetworkSpec((Dense(2, 1), Activation("sigmoid")))
    params = init_params(spec, make_rng(6, "n"))
    noise = np.random.default_rng(0)

    def builder(p):
        x = noise.standard_normal((4, 2))
        return bce(forward(spec, p, x, "train"), 1.0)

    with pytest.raises(UsageError):
        grad_check(spec, params, builder, 1e-5)


def test_verification_suite_passes():
    for label, err in gradcheck_suite():
        assert err < GRADCHECK_TOL, f"{label}: {err}"
