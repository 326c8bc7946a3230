import numpy as np
import pytest

from pulab.errors import UsageError
from pulab.nn import Activation, Dense, NetworkSpec, adam_step, init_params
from pulab.seeding import make_rng


def one_param_store():
    spec = NetworkSpec((Dense(1, 1), Activation("sigmoid")))
    store = init_params(spec, make_rng(0, "adam"))
    store.params["layer0.w"].value[...] = 0.0
    return store


def test_first_step_matches_reference_recurrence():
    # Reference: m=0.1, v=0.001, mhat=1, vhat=1, delta = lr/(1+eps).
    store = one_param_store()
    store.params["layer0.w"].leaf.grad = np.ones((1, 1))
    store.params["layer0.b"].leaf.grad = np.zeros(1)
    adam_step(store, lr=0.1, beta1=0.9, beta2=0.999, eps=1e-8)
    assert store.params["layer0.w"].value[0, 0] == pytest.approx(-0.1, abs=1e-7)
    assert store.params["layer0.w"].step == 1


def test_zero_grad_leaves_fresh_parameter_unchanged():
    store = one_param_store()
    store.params["layer0.w"].leaf.grad = np.zeros((1, 1))
    store.params["layer0.b"].leaf.grad = np.zeros(1)
    adam_step(store, lr=0.1)
    assert store.params["layer0.w"].value[0, 0] == 0.0
    assert store.params["layer0.w"].step == 1
    assert store.params["layer0.w"].leaf.grad is None  # grads cleared


def test_missing_grads_raise():
    store = one_param_store()
    with pytest.raises(UsageError):
        adam_step(store, lr=0.1)


def test_identical_states_step_identically():
    spec = NetworkSpec((Dense(3, 2), Activation("sigmoid")))
    a = init_params(spec, make_rng(4, "s"))
    b = init_params(spec, make_rng(4, "s"))
    g = make_rng(5, "g").standard_normal((3, 2))
    for store in (a, b):
        store.params["layer0.w"].leaf.grad = g.copy()
        store.params["layer0.b"].leaf.grad = np.ones(2)
        adam_step(store, lr=0.003, beta1=0.5)
    assert np.array_equal(a.params["layer0.w"].value, b.params["layer0.w"].value)
    assert np.array_equal(a.params["layer0.b"].value, b.params["layer0.b"].value)


def test_unreached_parameter_still_decays_moments():
    # A parameter missed by the last backward counts as zero-gradient.
    store = one_param_store()
    store.params["layer0.w"].leaf.grad = np.ones((1, 1))
    adam_step(store, lr=0.1)  # bias grad is None -> treated as zeros
    assert store.params["layer0.b"].step == 1
    assert np.all(store.params["layer0.b"].value == 0.0)
