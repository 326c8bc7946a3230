import numpy as np
import pytest

from pulab.baselines import (
    dgan_stage1_loss,
    dgan_stage2,
    train_dgan,
    train_naive_pu,
    train_supervised_oracle,
)
from pulab.data import LabeledPool, make_pu_split
from pulab.metrics import rolling_summary
from pulab.nn import Activation, Dense, NetworkSpec, Tensor
from pulab.seeding import make_rng
from pulab.training import TrainConfig, train


def blob_dataset(alpha=0.5, seed=0, n_pos=100, n_neg=100, n_p=32, n_u=64, n_test=32, distance=6.0):
    rng = make_rng(seed, "blobs")
    features = rng.standard_normal((n_pos + n_neg, 2))
    features[n_pos:, 0] += distance
    labels = np.concatenate([np.ones(n_pos, dtype=int), np.zeros(n_neg, dtype=int)])
    return make_pu_split(LabeledPool(features, labels), alpha, n_p, n_u, n_test, make_rng(seed, "s"))


def small_config(epochs=5, seed=0, **kwargs):
    cls = NetworkSpec(
        (Dense(2, 8), Activation("leaky_relu", 0.2), Dense(8, 1), Activation("sigmoid"))
    )
    gen = NetworkSpec((Dense(4, 8), Activation("relu"), Dense(8, 2)))
    return TrainConfig(
        generator=gen,
        discriminator=cls,
        observer=cls,
        epochs=epochs,
        batch_k=8,
        latent_dim=4,
        reinit_period=0,
        seed=seed,
        fd_samples=16,
        **kwargs,
    )


def test_stage1_loss_of_perfect_discriminator_is_near_zero():
    eps = 1e-7
    d_u = Tensor(np.full((4, 1), 1.0 - eps))
    d_p = Tensor(np.full((4, 1), eps))
    d_f = Tensor(np.full((4, 1), eps))
    assert dgan_stage1_loss(d_u, d_p, d_f).item() < 1e-6


def test_stage1_loss_weights_the_class_zero_terms():
    half = Tensor(np.full((2, 1), 0.5))
    ln2 = np.log(2.0)
    value = dgan_stage1_loss(half, half, half, w_pos=0.25, w_gen=0.75).item()
    assert value == pytest.approx(ln2 + 0.25 * ln2 + 0.75 * ln2, abs=1e-12)


def test_dgan_is_deterministic_per_seed():
    data = blob_dataset()
    a = train_dgan(data, small_config(seed=5))
    b = train_dgan(data, small_config(seed=5))
    assert a.history == b.history
    for name, p in a.classifier.params.items():
        assert np.array_equal(p.value, b.classifier.params[name].value)


def test_dgan_history_covers_both_stages():
    data = blob_dataset()
    cfg = small_config(epochs=4, dgan_stage2_epochs=3)
    result = train_dgan(data, cfg)
    assert len(result.history) == 4 + 3
    assert [r.epoch for r in result.history] == list(range(1, 8))
    # Stage-1 rows carry GAN losses; stage-2 rows carry the classifier loss.
    assert all(r.loss_ob == 0.0 for r in result.history[:4])
    assert all(r.loss_d == 0.0 and r.loss_g == 0.0 for r in result.history[4:])


def test_dgan_beats_chance_on_separated_blobs():
    data = blob_dataset(n_pos=300, n_neg=300, n_p=100, n_u=200, n_test=100)
    cfg = small_config(epochs=250, dgan_stage2_epochs=200)
    result = train_dgan(data, cfg)
    mean, _ = rolling_summary(result.history, 10)
    assert mean > 0.5


def test_dgan_stage2_sees_only_positives_and_the_snapshot():
    # Replaying stage 2 from the stored checkpoint reproduces the final
    # classifier bit for bit; x_u never enters the stage-2 signature.
    data = blob_dataset()
    cfg = small_config(epochs=4)
    result = train_dgan(data, cfg)
    _, replay, _ = dgan_stage2(
        data.x_p, data.test, result.checkpoints[cfg.epochs], cfg, checkpoint_index=0
    )
    for name, p in result.classifier.params.items():
        assert np.array_equal(p.value, replay.params[name].value)


def test_naive_alpha_zero_equals_supervised_oracle():
    data = blob_dataset(alpha=0.0)
    cfg = small_config(epochs=4, seed=3)
    naive = train_naive_pu(data, cfg)
    oracle = train_supervised_oracle(data, cfg)
    assert naive.history == oracle.history
    for name, p in naive.classifier.params.items():
        assert np.array_equal(p.value, oracle.classifier.params[name].value)


def test_naive_alpha_one_is_near_chance():
    # With alpha=1 the unlabeled pool is all positive; making the negative
    # class distribution identical to the positive one leaves the test
    # labels independent of the features, so any classifier sits at chance.
    data = blob_dataset(
        alpha=1.0, n_pos=400, n_neg=200, n_p=64, n_u=128, n_test=128, distance=0.0, seed=2
    )
    cfg = small_config(epochs=40, seed=2)
    result = train_naive_pu(data, cfg)
    mean, _ = rolling_summary(result.history, 5)
    assert 0.35 <= mean <= 0.65


def test_oracle_is_near_perfect_on_separable_blobs():
    data = blob_dataset(n_pos=300, n_neg=300, n_p=100, n_u=200, n_test=100)
    cfg = small_config(epochs=250, seed=1)
    result = train_supervised_oracle(data, cfg)
    mean, _ = rolling_summary(result.history, 5)
    assert mean >= 0.99


def test_hidden_labels_flow_only_to_the_oracle():
    data = blob_dataset()
    cfg = small_config(epochs=2)
    train(cfg, data)
    train_naive_pu(data, cfg)
    train_dgan(data, cfg)
    assert data.hidden_label_reads == 0
    train_supervised_oracle(data, cfg)
    assert data.hidden_label_reads == 1


def test_naive_positive_weight_changes_training():
    data = blob_dataset()
    plain = train_naive_pu(data, small_config(epochs=3))
    weighted = train_naive_pu(data, small_config(epochs=3, naive_positive_weight=4.0))
    assert plain.history != weighted.history
