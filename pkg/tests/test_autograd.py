import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import pulab.nn.autograd as ag
from pulab.errors import InvalidSpecError, UsageError
from pulab.nn import Tensor, bce
from pulab.seeding import make_rng


def test_sigmoid_derivative_at_zero():
    x = Tensor(np.zeros((1, 1)), requires_grad=True)
    out = ag.scale(ag.sigmoid(x), 1.0)
    out.backward()
    assert x.grad[0, 0] == pytest.approx(0.25, abs=1e-12)


def test_bce_reference_values():
    ln2 = math.log(2.0)
    assert bce(Tensor([[0.5]]), 1.0).item() == pytest.approx(ln2, abs=1e-12)
    assert bce(Tensor([[1.0 - ag.BCE_EPS]]), 1.0).item() == pytest.approx(0.0, abs=1e-6)
    assert bce(Tensor([[0.9]]), 0.0).item() == pytest.approx(-math.log(0.1), abs=1e-12)


def test_bce_rejects_non_binary_targets():
    with pytest.raises(InvalidSpecError):
        bce(Tensor([[0.5]]), 0.5)
    with pytest.raises(InvalidSpecError):
        bce(Tensor([[0.5, 0.5]]), np.array([0.0, 2.0]))


def test_bce_target_shape_mismatch():
    with pytest.raises(InvalidSpecError):
        bce(Tensor([[0.5], [0.5]]), np.array([1.0, 0.0, 1.0]))


def test_bce_weighted_matches_manual():
    p = np.array([0.2, 0.7, 0.9])
    t = np.array([0.0, 1.0, 1.0])
    w = np.array([2.0, 0.5, 1.0])
    got = bce(Tensor(p), t, weight=w).item()
    terms = -(t * np.log(p) + (1 - t) * np.log(1 - p))
    assert got == pytest.approx(float((terms * w).sum() / 3), rel=1e-12)


def test_backward_twice_is_an_error():
    x = Tensor(np.full((2, 1), 0.3), requires_grad=True)
    loss = bce(ag.sigmoid(x), 1.0)
    loss.backward()
    with pytest.raises(UsageError):
        loss.backward()


def test_backward_without_graph_is_an_error():
    with pytest.raises(UsageError):
        Tensor(np.zeros(())).backward()
    x = Tensor(np.zeros((1, 1)), requires_grad=True)
    with pytest.raises(UsageError):
        x.backward()


def test_backward_requires_scalar():
    x = Tensor(np.zeros((2, 2)), requires_grad=True)
    y = ag.relu(x)
    with pytest.raises(UsageError):
        y.backward()


def test_gradient_accumulates_across_shared_subgraphs():
    x = Tensor(np.array([[0.0]]), requires_grad=True)
    s = ag.sigmoid(x)
    loss = ag.add(bce(s, 1.0), bce(s, 1.0))
    loss.backward()
    single = Tensor(np.array([[0.0]]), requires_grad=True)
    bce(ag.sigmoid(single), 1.0).backward()
    assert x.grad[0, 0] == pytest.approx(2.0 * single.grad[0, 0], rel=1e-12)


def test_unreached_input_has_no_gradient():
    used = Tensor(np.full((1, 1), 0.2), requires_grad=True)
    unused = Tensor(np.full((1, 1), 0.7), requires_grad=True)
    bce(ag.sigmoid(used), 0.0).backward()
    assert used.grad is not None
    assert unused.grad is None  # stores report this as exactly-zero gradient


def test_forward_matches_straight_line_reimplementation():
    # Oracle: the same three-layer computation written as one numpy chain.
    rng = make_rng(5, "fwd")
    x = rng.standard_normal((6, 3))
    w1, b1 = rng.standard_normal((3, 5)), rng.standard_normal(5)
    w2, b2 = rng.standard_normal((5, 4)), rng.standard_normal(4)
    w3, b3 = rng.standard_normal((4, 1)), rng.standard_normal(1)

    h1 = ag.leaky_relu(ag.dense(Tensor(x), Tensor(w1), Tensor(b1)), 0.2)
    h2 = ag.relu(ag.dense(h1, Tensor(w2), Tensor(b2)))
    out = ag.sigmoid(ag.dense(h2, Tensor(w3), Tensor(b3)))

    a1 = x @ w1 + b1
    a1 = np.where(a1 > 0, a1, 0.2 * a1)
    a2 = np.maximum(a1 @ w2 + b2, 0.0)
    a3 = a2 @ w3 + b3
    expected = 1.0 / (1.0 + np.exp(-a3))
    assert np.abs(out.data - expected).max() < 1e-12


def test_dense_gradients_match_finite_differences():
    rng = make_rng(6, "fd")
    x = rng.standard_normal((4, 3))
    w = rng.standard_normal((3, 2))
    b = rng.standard_normal(2)

    def loss_value(wv, bv):
        return float(bce(ag.sigmoid(ag.dense(Tensor(x), Tensor(wv), Tensor(bv))), 1.0).data)

    wt = Tensor(w, requires_grad=True)
    bt = Tensor(b, requires_grad=True)
    bce(ag.sigmoid(ag.dense(Tensor(x), wt, bt)), 1.0).backward()

    h = 1e-6
    for idx in np.ndindex(w.shape):
        wp, wm = w.copy(), w.copy()
        wp[idx] += h
        wm[idx] -= h
        numeric = (loss_value(wp, b) - loss_value(wm, b)) / (2 * h)
        assert wt.grad[idx] == pytest.approx(numeric, rel=1e-5, abs=1e-9)


@settings(max_examples=50, deadline=None, derandomize=True)
@given(
    st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=1, max_size=16),
    st.data(),
)
def test_bce_is_finite_and_nonnegative(probs, data):
    targets = data.draw(
        st.lists(st.sampled_from([0.0, 1.0]), min_size=len(probs), max_size=len(probs))
    )
    value = bce(Tensor(np.array(probs)), np.array(targets)).item()
    assert value >= 0.0
    assert math.isfinite(value)
