"""Three-network adversarial PU trainer.

Per minibatch, one latent batch is passed through the generator and that
same generated batch feeds all three updates, in order: the discriminator
(unlabeled vs generated), the observer (positive vs generated), then the
generator (fool the discriminator while staying observer-negative). The
observer is periodically reinitialized so it cannot memorize the small
positive set, and it doubles as the final positive-vs-negative classifier.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .data import PUDataset
from .errors import InvalidSpecError, NumericError
from .metrics import GaussianFit, accuracy, fit_gaussian, frechet_distance
from .nn import (
    NetworkSpec,
    ParamStore,
    Tensor,
    adam_step,
    add,
    bce,
    classifier_spec,
    forward,
    init_params,
    reinit,
)
from .seeding import make_rng

UpdateHook = Callable[[str], None]


@dataclass(frozen=True)
class TrainConfig:
    generator: NetworkSpec
    discriminator: NetworkSpec
    observer: NetworkSpec
    epochs: int
    batch_k: int = 64
    latent_dim: int = 100
    lr: float = 2e-4
    adam_beta1: float = 0.5
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    reinit_period: int = 100  # 0 disables observer resets
    seed: int = 0
    eval_every: int = 1
    fd_samples: int = 512
    # Baseline knobs (ignored by the three-network trainer).
    dgan_stage2_epochs: Optional[int] = None
    dgan_checkpoints: Optional[tuple] = None
    dgan_positive_weight: float = 0.5
    dgan_generated_weight: float = 0.5
    naive_positive_weight: float = 1.0

    def __post_init__(self):
        if self.epochs < 1:
            raise InvalidSpecError("epochs must be >= 1")
        if self.batch_k < 1:
            raise InvalidSpecError("batch_k must be >= 1")
        if self.latent_dim < 1:
            raise InvalidSpecError("latent_dim must be >= 1")
        if self.reinit_period < 0:
            raise InvalidSpecError("reinit_period must be 0 (disabled) or >= 1")
        if self.eval_every < 1:
            raise InvalidSpecError("eval_every must be >= 1")
        if self.fd_samples < 2:
            raise InvalidSpecError("fd_samples must be >= 2 to fit moments")
        classifier_spec(self.discriminator)
        classifier_spec(self.observer)
        if self.generator.in_dim != self.latent_dim:
            raise InvalidSpecError(
                f"generator input dim {self.generator.in_dim} != latent_dim {self.latent_dim}"
            )
        for name, spec in (("discriminator", self.discriminator), ("observer", self.observer)):
            if spec.in_dim != self.generator.out_dim:
                raise InvalidSpecError(
                    f"{name} input dim {spec.in_dim} != generator output dim {self.generator.out_dim}"
                )


@dataclass(frozen=True)
class MetricsRecord:
    epoch: int
    loss_d: float
    loss_g: float
    loss_ob: float
    test_accuracy: float
    fd_gen_unlabeled: float
    fd_gen_positive: float


@dataclass
class TrainState:
    cfg: TrainConfig
    g_store: ParamStore
    d_store: ParamStore
    ob_store: ParamStore
    rngs: dict
    epoch: int = 0
    fit_u: Optional[GaussianFit] = None
    fit_p: Optional[GaussianFit] = None
    last_eval: tuple = (0.0, 0.0, 0.0)
    hooks: list = field(default_factory=list)


def loss_d(d_real: Tensor, d_fake: Tensor) -> Tensor:
    """Discriminator loss: unlabeled toward 1, generated toward 0."""
    if d_real.data.shape != d_fake.data.shape:
        raise InvalidSpecError(f"loss_d: shapes {d_real.data.shape} vs {d_fake.data.shape}")
    return add(bce(d_real, 1.0), bce(d_fake, 0.0))


def loss_ob(ob_pos: Tensor, ob_fake: Tensor) -> Tensor:
    """Observer loss: positives toward 0, generated toward 1."""
    if ob_pos.data.shape != ob_fake.data.shape:
        raise InvalidSpecError(f"loss_ob: shapes {ob_pos.data.shape} vs {ob_fake.data.shape}")
    return add(bce(ob_pos, 0.0), bce(ob_fake, 1.0))


def loss_g(d_fake: Tensor, ob_fake: Tensor) -> Tensor:
    """Generator loss: look real to the discriminator and non-positive to
    the observer (both generated-sample heads pushed toward 1)."""
    if d_fake.data.shape != ob_fake.data.shape:
        raise InvalidSpecError(f"loss_g: shapes {d_fake.data.shape} vs {ob_fake.data.shape}")
    return add(bce(d_fake, 1.0), bce(ob_fake, 1.0))


def init_state(cfg: TrainConfig) -> TrainState:
    rngs = {
        name: make_rng(cfg.seed, name)
        for name in (
            "init/generator",
            "init/discriminator",
            "init/observer",
            "shuffle",
            "noise",
            "dropout",
            "reinit",
            "eval",
        )
    }
    return TrainState(
        cfg=cfg,
        g_store=init_params(cfg.generator, rngs["init/generator"]),
        d_store=init_params(cfg.discriminator, rngs["init/discriminator"]),
        ob_store=init_params(cfg.observer, rngs["init/observer"]),
        rngs=rngs,
    )


def classify(spec: NetworkSpec, params: ParamStore, x) -> tuple[np.ndarray, np.ndarray]:
    """Eval-mode scores and hard labels for a classifier network.

    The score is the network's probability of the *negative* class, so a
    sample is predicted positive iff score < 0.5 (ties go to negative).
    """
    scores = forward(spec, params, x, mode="eval").data.reshape(-1)
    labels = (scores < 0.5).astype(np.int64)
    return labels, scores


def _evaluate(state: TrainState, data: PUDataset) -> tuple[float, float, float]:
    cfg = state.cfg
    _, scores = classify(cfg.observer, state.ob_store, data.test.features)
    acc = accuracy(scores, data.test.labels)
    z = state.rngs["eval"].standard_normal((cfg.fd_samples, cfg.latent_dim))
    gen = forward(cfg.generator, state.g_store, z, mode="eval").data
    fit_g = fit_gaussian(gen)
    return (
        acc,
        frechet_distance(fit_g, state.fit_u),
        frechet_distance(fit_g, state.fit_p),
    )


def train_epoch(
    state: TrainState,
    data: PUDataset,
    cfg: TrainConfig,
    update_hook: Optional[UpdateHook] = None,
) -> MetricsRecord:
    """One pass of min(|x_u|, |x_p|) // batch_k minibatches in D, Ob, G order."""
    state.epoch += 1
    e = state.epoch
    k = cfg.batch_k

    if cfg.reinit_period and e % cfg.reinit_period == 0:
        reinit(cfg.observer, state.ob_store, state.rngs["reinit"])
        if update_hook:
            update_hook("reinit:observer")

    n_batches = min(len(data.x_u), len(data.x_p)) // k
    if n_batches == 0:
        raise InvalidSpecError(f"batch_k={k} exceeds the smaller pool size")
    u_order = state.rngs["shuffle"].permutation(len(data.x_u))
    p_order = state.rngs["shuffle"].permutation(len(data.x_p))

    drop = state.rngs["dropout"]
    sum_d = sum_g = sum_ob = 0.0
    for b in range(n_batches):
        try:
            xu = data.x_u[u_order[b * k : (b + 1) * k]]
            xp = data.x_p[p_order[b * k : (b + 1) * k]]
            z = state.rngs["noise"].standard_normal((k, cfg.latent_dim))
            xz = forward(cfg.generator, state.g_store, z, "train", drop)
            xz_data = xz.data  # the same generated batch feeds all three updates

            d_real = forward(cfg.discriminator, state.d_store, xu, "train", drop)
            d_fake = forward(cfg.discriminator, state.d_store, xz_data, "train", drop)
            ld = loss_d(d_real, d_fake)
            ld.backward()
            adam_step(state.d_store, cfg.lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps)
            if update_hook:
                update_hook("discriminator")

            ob_pos = forward(cfg.observer, state.ob_store, xp, "train", drop)
            ob_fake = forward(cfg.observer, state.ob_store, xz_data, "train", drop)
            lob = loss_ob(ob_pos, ob_fake)
            lob.backward()
            adam_step(state.ob_store, cfg.lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps)
            if update_hook:
                update_hook("observer")

            d_fake_g = forward(cfg.discriminator, state.d_store, xz, "train", drop, trainable=False)
            ob_fake_g = forward(cfg.observer, state.ob_store, xz, "train", drop, trainable=False)
            lg = loss_g(d_fake_g, ob_fake_g)
            lg.backward()
            adam_step(state.g_store, cfg.lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps)
            if update_hook:
                update_hook("generator")
        except NumericError as exc:
            raise NumericError(f"epoch {e} batch {b}: {exc}") from exc

        sum_d += ld.item()
        sum_ob += lob.item()
        sum_g += lg.item()

    if e % cfg.eval_every == 0:
        state.last_eval = _evaluate(state, data)
    acc, fd_u, fd_p = state.last_eval
    return MetricsRecord(
        epoch=e,
        loss_d=sum_d / n_batches,
        loss_g=sum_g / n_batches,
        loss_ob=sum_ob / n_batches,
        test_accuracy=acc,
        fd_gen_unlabeled=fd_u,
        fd_gen_positive=fd_p,
    )


@dataclass
class TrainResult:
    history: list
    observer: ParamStore
    generator: ParamStore
    discriminator: ParamStore


def train(
    cfg: TrainConfig,
    data: PUDataset,
    update_hook: Optional[UpdateHook] = None,
    on_epoch: Optional[Callable[[MetricsRecord], None]] = None,
) -> TrainResult:
    """Run cfg.epochs epochs; observer resets land at the top of every
    epoch that is a positive multiple of reinit_period, before that epoch's
    updates. Returns the per-epoch history and the final stores."""
    if data.dim != cfg.generator.out_dim:
        raise InvalidSpecError(
            f"data dim {data.dim} != generator output dim {cfg.generator.out_dim}"
        )
    state = init_state(cfg)
    state.fit_u = fit_gaussian(data.x_u)
    state.fit_p = fit_gaussian(data.x_p)
    # Seed the carry-forward metrics so epochs skipped by eval_every still
    # report well-defined values.
    state.last_eval = _evaluate(state, data)
    history = []
    for _ in range(cfg.epochs):
        record = train_epoch(state, data, cfg, update_hook)
        history.append(record)
        if on_epoch:
            on_epoch(record)
    return TrainResult(
        history=history,
        observer=state.ob_store,
        generator=state.g_store,
        discriminator=state.d_store,
    )
