"""Comparator methods sharing the same network core and evaluation path.

* dgan: a two-stage approach. Stage 1 trains a generator against a
  discriminator that treats unlabeled data as one class and positive plus
  generated data as the other, so the generator gravitates toward
  pseudo-negatives. Stage 2 trains a fresh classifier on positives versus a
  fixed pool drawn from a stage-1 generator checkpoint.
* naive_pu: every unlabeled sample is treated as negative (optionally with
  a higher penalty on mislabeled positives).
* oracle: fully supervised on the ground-truth labels; the only code path
  allowed to read a dataset's hidden labels. Upper-bound reference.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .data import LabeledPool, PUDataset
from .errors import InvalidSpecError, NumericError
from .metrics import GaussianFit, accuracy, fit_gaussian, frechet_distance
from .nn import ParamStore, Tensor, adam_step, add, bce, forward, init_params, scale
from .seeding import make_rng
from .training import MetricsRecord, TrainConfig, classify

@dataclass
class BaselineResult:
    method: str
    history: list
    classifier: ParamStore
    classifier_spec: object
    generator: Optional[ParamStore] = None
    checkpoints: dict = field(default_factory=dict)


def dgan_stage1_loss(d_unlabeled: Tensor, d_positive: Tensor, d_generated: Tensor,
                     w_pos: float = 0.5, w_gen: float = 0.5) -> Tensor:
    """Unlabeled toward 1; positive and generated sources toward 0 with
    configurable weights on the two class-0 terms."""
    return add(
        bce(d_unlabeled, 1.0),
        add(scale(bce(d_positive, 0.0), w_pos), scale(bce(d_generated, 0.0), w_gen)),
    )


def _fit_classifier(
    spec,
    features: np.ndarray,
    targets: np.ndarray,
    weights: Optional[np.ndarray],
    test: LabeledPool,
    cfg: TrainConfig,
    epochs: int,
    stream_prefix: str,
    epoch_offset: int = 0,
    fd_values: tuple = (0.0, 0.0),
    on_epoch=None,
) -> tuple[list, ParamStore]:
    """Plain supervised BCE loop over a combined sample pool.

    Targets follow the classifier convention (0 = positive class). The
    training loss lands in the loss_ob column; loss_d/loss_g stay 0. The FD
    columns are filled with the provided constants.
    """
    rng_init = make_rng(cfg.seed, f"{stream_prefix}/init")
    rng_shuffle = make_rng(cfg.seed, f"{stream_prefix}/shuffle")
    rng_drop = make_rng(cfg.seed, f"{stream_prefix}/dropout")
    store = init_params(spec, rng_init)
    n = features.shape[0]
    k = cfg.batch_k
    if n < k:
        raise InvalidSpecError(f"batch_k={k} exceeds the training pool size {n}")

    def test_accuracy() -> float:
        _, scores = classify(spec, store, test.features)
        return accuracy(scores, test.labels)

    history = []
    last_acc = test_accuracy()
    for e in range(1, epochs + 1):
        order = rng_shuffle.permutation(n)
        n_batches = n // k
        loss_sum = 0.0
        for b in range(n_batches):
            idx = order[b * k : (b + 1) * k]
            try:
                out = forward(spec, store, features[idx], "train", rng_drop)
                loss = bce(out, targets[idx], None if weights is None else weights[idx])
                loss.backward()
                adam_step(store, cfg.lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps)
            except NumericError as exc:
                raise NumericError(f"epoch {e} batch {b}: {exc}") from exc
            loss_sum += loss.item()
        if e % cfg.eval_every == 0:
            last_acc = test_accuracy()
        record = MetricsRecord(
            epoch=epoch_offset + e,
            loss_d=0.0,
            loss_g=0.0,
            loss_ob=loss_sum / n_batches,
            test_accuracy=last_acc,
            fd_gen_unlabeled=fd_values[0],
            fd_gen_positive=fd_values[1],
        )
        history.append(record)
        if on_epoch:
            on_epoch(record)
    return history, store


def train_naive_pu(data: PUDataset, cfg: TrainConfig, on_epoch=None) -> BaselineResult:
    """Treat the whole unlabeled pool as negative."""
    features = np.vstack([data.x_p, data.x_u])
    targets = np.concatenate([np.zeros(len(data.x_p)), np.ones(len(data.x_u))])
    if cfg.naive_positive_weight != 1.0:
        weights = np.concatenate(
            [np.full(len(data.x_p), cfg.naive_positive_weight), np.ones(len(data.x_u))]
        )
    else:
        weights = None
    history, store = _fit_classifier(
        cfg.observer, features, targets, weights, data.test, cfg, cfg.epochs, "classifier",
        on_epoch=on_epoch,
    )
    return BaselineResult("naive_pu", history, store, cfg.observer)


def train_supervised_oracle(data: PUDataset, cfg: TrainConfig, on_epoch=None) -> BaselineResult:
    """Fully supervised upper bound using the hidden ground-truth labels."""
    hidden = data.hidden_labels()
    features = np.vstack([data.x_p, data.x_u])
    # Classifier targets: 0 for positives, 1 for negatives.
    targets = np.concatenate([np.zeros(len(data.x_p)), 1.0 - hidden.astype(np.float64)])
    history, store = _fit_classifier(
        cfg.observer, features, targets, None, data.test, cfg, cfg.epochs, "classifier",
        on_epoch=on_epoch,
    )
    return BaselineResult("oracle", history, store, cfg.observer)


def dgan_stage2(
    x_p: np.ndarray,
    test: LabeledPool,
    generator_store: ParamStore,
    cfg: TrainConfig,
    checkpoint_index: int = 0,
    epoch_offset: int = 0,
    pool_fits: Optional[tuple] = None,
    on_epoch=None,
) -> tuple[list, ParamStore, np.ndarray]:
    """Train the stage-2 classifier on positives vs generated pseudo-negatives.

    By construction this step sees only x_p, the frozen generator, and the
    test pool used for evaluation; the unlabeled set appears at most as
    precomputed moment fits for the metric columns.
    """
    rng_z = make_rng(cfg.seed, f"dgan/stage2/{checkpoint_index}/pseudo")
    z = rng_z.standard_normal((len(x_p), cfg.latent_dim))
    pseudo = forward(cfg.generator, generator_store, z, mode="eval").data
    if pool_fits is not None:
        fit_g = fit_gaussian(pseudo)
        fd_values = (frechet_distance(fit_g, pool_fits[0]), frechet_distance(fit_g, pool_fits[1]))
    else:
        fd_values = (0.0, 0.0)
    features = np.vstack([x_p, pseudo])
    targets = np.concatenate([np.zeros(len(x_p)), np.ones(len(pseudo))])
    epochs = cfg.dgan_stage2_epochs if cfg.dgan_stage2_epochs is not None else cfg.epochs
    history, store = _fit_classifier(
        cfg.observer,
        features,
        targets,
        None,
        test,
        cfg,
        epochs,
        f"dgan/stage2/{checkpoint_index}",
        epoch_offset=epoch_offset,
        fd_values=fd_values,
        on_epoch=on_epoch,
    )
    return history, store, pseudo


def train_dgan(data: PUDataset, cfg: TrainConfig, on_epoch=None) -> BaselineResult:
    """Two-stage baseline: adversarial pseudo-negative generation, then a
    supervised classifier per configured generator checkpoint.

    The final classifier comes from the last checkpoint in the list (the
    final generator by default). Stage-1 rows report the discriminator used
    directly as a positive-vs-rest scorer, which is diagnostic only.
    """
    checkpoints = cfg.dgan_checkpoints if cfg.dgan_checkpoints else (cfg.epochs,)
    checkpoints = tuple(sorted(set(int(c) for c in checkpoints)))
    if checkpoints[0] < 1 or checkpoints[-1] > cfg.epochs:
        raise InvalidSpecError(f"dgan checkpoints {checkpoints} outside 1..{cfg.epochs}")

    rngs = {
        name: make_rng(cfg.seed, f"dgan/{name}")
        for name in ("init/generator", "init/discriminator", "shuffle", "noise", "dropout", "eval")
    }
    g_store = init_params(cfg.generator, rngs["init/generator"])
    d_store = init_params(cfg.discriminator, rngs["init/discriminator"])
    fit_u = fit_gaussian(data.x_u)
    fit_p = fit_gaussian(data.x_p)
    k = cfg.batch_k
    n_batches = min(len(data.x_u), len(data.x_p)) // k
    if n_batches == 0:
        raise InvalidSpecError(f"batch_k={k} exceeds the smaller pool size")

    def stage1_eval() -> tuple[float, float, float]:
        _, scores = classify(cfg.discriminator, d_store, data.test.features)
        acc = accuracy(scores, data.test.labels)
        z = rngs["eval"].standard_normal((cfg.fd_samples, cfg.latent_dim))
        gen = forward(cfg.generator, g_store, z, mode="eval").data
        fit_g = fit_gaussian(gen)
        return acc, frechet_distance(fit_g, fit_u), frechet_distance(fit_g, fit_p)

    history = []
    snapshots = {}
    last_eval = stage1_eval()
    for e in range(1, cfg.epochs + 1):
        u_order = rngs["shuffle"].permutation(len(data.x_u))
        p_order = rngs["shuffle"].permutation(len(data.x_p))
        sum_d = sum_g = 0.0
        for b in range(n_batches):
            try:
                xu = data.x_u[u_order[b * k : (b + 1) * k]]
                xp = data.x_p[p_order[b * k : (b + 1) * k]]
                z = rngs["noise"].standard_normal((k, cfg.latent_dim))
                xz = forward(cfg.generator, g_store, z, "train", rngs["dropout"])

                d_real = forward(cfg.discriminator, d_store, xu, "train", rngs["dropout"])
                d_pos = forward(cfg.discriminator, d_store, xp, "train", rngs["dropout"])
                d_fake = forward(cfg.discriminator, d_store, xz.data, "train", rngs["dropout"])
                ld = dgan_stage1_loss(
                    d_real, d_pos, d_fake, cfg.dgan_positive_weight, cfg.dgan_generated_weight
                )
                ld.backward()
                adam_step(d_store, cfg.lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps)

                d_fake_g = forward(
                    cfg.discriminator, d_store, xz, "train", rngs["dropout"], trainable=False
                )
                lg = bce(d_fake_g, 1.0)
                lg.backward()
                adam_step(g_store, cfg.lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps)
            except NumericError as exc:
                raise NumericError(f"stage 1 epoch {e} batch {b}: {exc}") from exc
            sum_d += ld.item()
            sum_g += lg.item()
        if e % cfg.eval_every == 0:
            last_eval = stage1_eval()
        acc, fd_u, fd_p = last_eval
        record = MetricsRecord(
            epoch=e,
            loss_d=sum_d / n_batches,
            loss_g=sum_g / n_batches,
            loss_ob=0.0,
            test_accuracy=acc,
            fd_gen_unlabeled=fd_u,
            fd_gen_positive=fd_p,
        )
        history.append(record)
        if on_epoch:
            on_epoch(record)
        if e in checkpoints:
            snapshots[e] = g_store.clone()

    classifier = None
    offset = cfg.epochs
    for i, ckpt in enumerate(checkpoints):
        st2_history, classifier, _ = dgan_stage2(
            data.x_p,
            data.test,
            snapshots[ckpt],
            cfg,
            checkpoint_index=i,
            epoch_offset=offset,
            pool_fits=(fit_u, fit_p),
            on_epoch=on_epoch,
        )
        history.extend(st2_history)
        offset = history[-1].epoch
    return BaselineResult(
        "dgan", history, classifier, cfg.observer, generator=g_store, checkpoints=snapshots
    )
