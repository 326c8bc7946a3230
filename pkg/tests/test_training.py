import math

import numpy as np
import pytest

from pulab.config import ExperimentConfig, build_dataset, build_train_config
from pulab.data import LabeledPool, PUDataset, make_pu_split
from pulab.errors import InvalidSpecError, NumericError
from pulab.nn import (
    Activation,
    Dense,
    NetworkSpec,
    Normalize,
    Tensor,
    adam_step,
    bce,
    forward,
    init_params,
)
from pulab.seeding import make_rng
from pulab.training import (
    MetricsRecord,
    TrainConfig,
    classify,
    init_state,
    loss_d,
    loss_g,
    loss_ob,
    train,
    train_epoch,
)

TWO_LN2 = 2.0 * math.log(2.0)


def tiny_config(epochs=3, reinit=0, seed=0, batch_k=8, eval_every=1):
    cls = NetworkSpec(
        (Dense(2, 8), Activation("leaky_relu", 0.2), Dense(8, 1), Activation("sigmoid"))
    )
    gen = NetworkSpec((Dense(5, 8), Activation("relu"), Dense(8, 2)))
    return TrainConfig(
        generator=gen,
        discriminator=cls,
        observer=cls,
        epochs=epochs,
        batch_k=batch_k,
        latent_dim=5,
        reinit_period=reinit,
        seed=seed,
        eval_every=eval_every,
        fd_samples=16,
    )


def tiny_dataset(seed=0, n_pos=40, n_neg=40, n_p=16, n_u=32, n_test=16):
    rng = make_rng(seed, "data")
    features = rng.standard_normal((n_pos + n_neg, 2))
    features[n_pos:, 0] += 4.0
    labels = np.concatenate([np.ones(n_pos, dtype=int), np.zeros(n_neg, dtype=int)])
    return make_pu_split(LabeledPool(features, labels), 0.5, n_p, n_u, n_test, make_rng(seed, "s"))


class TestLosses:
    def test_all_half_outputs_give_two_ln_two(self):
        half = Tensor(np.full((4, 1), 0.5))
        assert loss_d(half, half).item() == pytest.approx(TWO_LN2, abs=1e-12)
        assert loss_ob(half, half).item() == pytest.approx(TWO_LN2, abs=1e-12)
        assert loss_g(half, half).item() == pytest.approx(TWO_LN2, abs=1e-12)

    def test_confident_outputs_give_near_zero(self):
        eps = 1e-7
        lo = Tensor(np.full((3, 1), eps))
        hi = Tensor(np.full((3, 1), 1.0 - eps))
        assert loss_d(hi, lo).item() < 1e-6
        assert loss_ob(lo, hi).item() < 1e-6
        assert loss_g(hi, hi).item() < 1e-6

    def test_hand_computed_values(self):
        # Frozen from independent scalar evaluation of the loss formulas.
        ld = loss_d(Tensor([[0.8], [0.6]]), Tensor([[0.3], [0.1]]))
        assert ld.item() == pytest.approx(0.5980023173383796, abs=1e-12)
        lob = loss_ob(Tensor([[0.2]]), Tensor([[0.7]]))
        assert lob.item() == pytest.approx(0.5798184952529422, abs=1e-12)
        lg = loss_g(Tensor([[0.4]]), Tensor([[0.9]]))
        assert lg.item() == pytest.approx(1.0216512475319813, abs=1e-12)

    def test_generator_loss_additivity_is_exact(self):
        rng = make_rng(1, "add")
        d_fake = Tensor(rng.random((16, 1)))
        ob_fake = Tensor(rng.random((16, 1)))
        combined = loss_g(d_fake, ob_fake).item()
        parts = bce(d_fake, 1.0).item() + bce(ob_fake, 1.0).item()
        assert combined == pytest.approx(parts, abs=1e-12)

    def test_shape_mismatch_rejected(self):
        with pytest.raises(InvalidSpecError):
            loss_d(Tensor(np.full((2, 1), 0.5)), Tensor(np.full((3, 1), 0.5)))


class TestFreezeAndOrder:
    def test_frozen_stores_get_exactly_zero_gradients(self):
        cfg = tiny_config()
        state = init_state(cfg)
        rng = make_rng(3, "b")
        z = rng.standard_normal((8, 5))
        xz = forward(cfg.generator, state.g_store, z, "train")
        d_fake = forward(cfg.discriminator, state.d_store, xz, "train", trainable=False)
        ob_fake = forward(cfg.observer, state.ob_store, xz, "train", trainable=False)
        loss_g(d_fake, ob_fake).backward()
        for store in (state.d_store, state.ob_store):
            for name in store.params:
                assert np.all(store.grad_of(name) == 0.0)
        assert any(np.any(state.g_store.grad_of(n) != 0.0) for n in state.g_store.params)

    def test_detached_generated_batch_leaves_generator_untouched(self):
        cfg = tiny_config()
        state = init_state(cfg)
        rng = make_rng(4, "b")
        xz = forward(cfg.generator, state.g_store, rng.standard_normal((8, 5)), "train")
        xu = rng.standard_normal((8, 2))
        d_real = forward(cfg.discriminator, state.d_store, xu, "train")
        d_fake = forward(cfg.discriminator, state.d_store, xz.data, "train")
        loss_d(d_real, d_fake).backward()
        for name in state.g_store.params:
            assert np.all(state.g_store.grad_of(name) == 0.0)

    def test_update_order_is_d_ob_g(self):
        cfg = tiny_config(epochs=2)
        data = tiny_dataset()
        calls = []
        train(cfg, data, update_hook=calls.append)
        steps = [c for c in calls if c != "reinit:observer"]
        assert len(steps) % 3 == 0
        for i in range(0, len(steps), 3):
            assert steps[i : i + 3] == ["discriminator", "observer", "generator"]


class TestTrainLoop:
    def test_history_length_equals_epochs(self):
        result = train(tiny_config(epochs=4), tiny_dataset())
        assert [r.epoch for r in result.history] == [1, 2, 3, 4]

    def test_training_is_deterministic_per_seed(self):
        a = train(tiny_config(epochs=3, seed=11), tiny_dataset())
        b = train(tiny_config(epochs=3, seed=11), tiny_dataset())
        assert a.history == b.history
        for name, p in a.observer.params.items():
            assert np.array_equal(p.value, b.observer.params[name].value)

    def test_reinit_disabled_never_resets(self):
        cfg = tiny_config(epochs=6, reinit=0)
        calls = []
        train(cfg, tiny_dataset(), update_hook=calls.append)
        assert "reinit:observer" not in calls

    def test_reinit_fires_at_exact_multiples(self):
        cfg = tiny_config(epochs=250, reinit=100, batch_k=16)
        data = tiny_dataset(n_p=16, n_u=16, n_test=16)
        events = []
        state = init_state(cfg)
        from pulab.metrics import fit_gaussian
        from pulab.training import _evaluate

        state.fit_u = fit_gaussian(data.x_u)
        state.fit_p = fit_gaussian(data.x_p)
        state.last_eval = _evaluate(state, data)
        for epoch in range(1, cfg.epochs + 1):
            train_epoch(state, data, cfg, update_hook=lambda name: events.append((epoch, name)))
        reinits = [e for e, name in events if name == "reinit:observer"]
        assert reinits == [100, 200]

    def test_reinit_resets_optimizer_state_before_updates(self):
        # After the reset epoch, the observer's step count equals only that
        # epoch's minibatch count.
        cfg = tiny_config(epochs=5, reinit=5, batch_k=16)
        data = tiny_dataset(n_p=16, n_u=16, n_test=16)
        result = train(cfg, data)
        assert result.observer.params["layer0.w"].step == 1  # one batch per epoch

    def test_eval_every_carries_last_values(self):
        cfg = tiny_config(epochs=5, eval_every=2)
        hist = train(cfg, tiny_dataset()).history

        def eval_fields(rec):
            return (rec.test_accuracy, rec.fd_gen_unlabeled, rec.fd_gen_positive)

        assert eval_fields(hist[2]) == eval_fields(hist[1])  # epoch 3 carries epoch 2
        assert eval_fields(hist[4]) == eval_fields(hist[3])  # epoch 5 carries epoch 4
        assert eval_fields(hist[1]) != eval_fields(hist[3])  # epochs 2 and 4 evaluated fresh

    def test_nonfinite_loss_aborts_with_location(self):
        cfg = tiny_config(epochs=1)
        data = tiny_dataset()
        state = init_state(cfg)
        from pulab.metrics import fit_gaussian

        state.fit_u = fit_gaussian(data.x_u)
        state.fit_p = fit_gaussian(data.x_p)
        state.g_store.params["layer0.w"].value[...] = 1e308
        with pytest.raises(NumericError, match=r"epoch 1 batch 0"):
            train_epoch(state, data, cfg)


class TestEarlyPhaseAndDescent:
    def test_discriminator_loss_strictly_decreases_on_separable_batch(self):
        spec = NetworkSpec(
            (Dense(2, 16), Activation("leaky_relu", 0.2), Dense(16, 1), Activation("sigmoid"))
        )
        store = init_params(spec, make_rng(8, "d"))
        rng = make_rng(9, "b")
        real = rng.standard_normal((32, 2)) + 6.0
        fake = rng.standard_normal((32, 2)) - 6.0
        losses = []
        for _ in range(50):
            ld = loss_d(forward(spec, store, real, "train"), forward(spec, store, fake, "train"))
            losses.append(ld.item())
            ld.backward()
            adam_step(store, 2e-4, 0.5)
        assert all(b < a for a, b in zip(losses, losses[1:]))

    def test_fresh_observer_separates_distant_fakes_quickly(self):
        # Generated samples pinned far from the positives: the observer loss
        # falls below 0.1 within 200 steps.
        spec = NetworkSpec(
            (Dense(2, 16), Activation("leaky_relu", 0.2), Dense(16, 1), Activation("sigmoid"))
        )
        store = init_params(spec, make_rng(10, "ob"))
        rng = make_rng(11, "b")
        positives = rng.standard_normal((32, 2)) * 0.3
        fakes = rng.standard_normal((32, 2)) * 0.3 + 10.0
        final = None
        for _ in range(200):
            lob = loss_ob(forward(spec, store, positives, "train"), forward(spec, store, fakes, "train"))
            final = lob.item()
            lob.backward()
            adam_step(store, 3e-3, 0.5)
        assert final < 0.1


class TestClassify:
    def test_constant_half_observer_predicts_all_negative(self):
        spec = NetworkSpec((Dense(2, 1), Activation("sigmoid")))
        store = init_params(spec, make_rng(12, "c"))
        store.params["layer0.w"].value[...] = 0.0
        labels, scores = classify(spec, store, np.zeros((9, 2)))
        assert np.all(scores == 0.5)
        assert np.all(labels == 0)

    def test_hand_built_threshold_rule_recovered_exactly(self):
        # Score sigma(B*x0) crosses 0.5 at x0=0: positive iff x0 < 0.
        spec = NetworkSpec((Dense(2, 1), Activation("sigmoid")))
        store = init_params(spec, make_rng(13, "c"))
        store.params["layer0.w"].value[...] = np.array([[50.0], [0.0]])
        grid = np.array([[x0, x1] for x0 in np.linspace(-2, 2, 21) for x1 in (-1.0, 0.5)])
        labels, scores = classify(spec, store, grid)
        assert np.array_equal(labels, (grid[:, 0] < 0).astype(int))
        assert np.all((scores > 0.0) & (scores < 1.0))
