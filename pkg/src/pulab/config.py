"""Experiment configuration: versioned JSON schema, strictly validated.

Unknown keys are rejected outright so a config either reproduces a run
exactly or fails fast. Networks are described by small builder blocks
(hidden widths plus flags) rather than raw layer lists.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .data import LabeledPool, PUDataset, load_idx, make_gaussian_mixture, make_pu_split, make_two_moons
from .errors import InvalidSpecError
from .nn import Activation, Dense, Dropout, NetworkSpec, Normalize
from .seeding import make_rng
from .training import TrainConfig

SCHEMA_VERSION = 1
METHODS = ("observer_gan", "dgan", "naive_pu", "oracle")

_TRAIN_DEFAULTS = dict(
    epochs=500,
    batch_k=64,
    latent_dim=100,
    lr=2e-4,
    adam_beta1=0.5,
    adam_beta2=0.999,
    adam_eps=1e-8,
    reinit_period=100,
    eval_every=1,
    fd_samples=512,
    dgan_stage2_epochs=None,
    dgan_checkpoints=None,
    dgan_positive_weight=0.5,
    dgan_generated_weight=0.5,
    naive_positive_weight=1.0,
)


_REQUIRED = object()


class _Section:
    """Dict wrapper that tracks consumed keys and rejects leftovers."""

    def __init__(self, raw: dict, path: str):
        if not isinstance(raw, dict):
            raise InvalidSpecError(f"{path}: expected an object")
        self.raw = dict(raw)
        self.path = path

    def take(self, key, default=_REQUIRED):
        if key in self.raw:
            return self.raw.pop(key)
        if default is _REQUIRED:
            raise InvalidSpecError(f"{self.path}: missing required field '{key}'")
        return default

    def finish(self):
        if self.raw:
            keys = ", ".join(sorted(self.raw))
            raise InvalidSpecError(f"{self.path}: unknown field(s): {keys}")


@dataclass
class ExperimentConfig:
    seed: int
    out_dir: str
    dataset: dict
    alpha: float
    n_p: int
    n_u: int
    n_test: int
    methods: tuple
    train_options: dict
    generator_options: dict
    classifier_options: dict

    @staticmethod
    def from_file(path) -> "ExperimentConfig":
        with open(path, "r", encoding="utf-8") as f:
            raw = json.load(f)
        return ExperimentConfig.from_dict(raw)

    @staticmethod
    def from_dict(raw: dict) -> "ExperimentConfig":
        top = _Section(raw, "config")
        version = top.take("schema_version")
        if version != SCHEMA_VERSION:
            raise InvalidSpecError(f"config.schema_version: expected {SCHEMA_VERSION}, got {version}")
        seed = int(top.take("seed"))
        out_dir = str(top.take("out_dir"))

        ds = _Section(top.take("dataset"), "config.dataset")
        kind = ds.take("kind")
        dataset: dict = {"kind": kind}
        if kind == "two_moons":
            dataset["n"] = int(ds.take("n"))
            dataset["noise"] = float(ds.take("noise"))
        elif kind == "gaussian_mixture":
            dataset["means"] = ds.take("means")
            dataset["covs"] = ds.take("covs")
            dataset["counts"] = ds.take("counts")
            dataset["positive_components"] = ds.take("positive_components", [0])
        elif kind == "idx":
            dataset["images"] = str(ds.take("images"))
            dataset["labels"] = str(ds.take("labels"))
            dataset["positive_labels"] = ds.take("positive_labels", [0, 2, 4, 6, 8])
            dataset["downscale"] = ds.take("downscale", None)
        else:
            raise InvalidSpecError(f"config.dataset.kind: unknown kind {kind!r}")
        ds.finish()

        alpha = float(top.take("alpha"))
        sizes = _Section(top.take("sizes"), "config.sizes")
        n_p = int(sizes.take("n_p"))
        n_u = int(sizes.take("n_u"))
        n_test = int(sizes.take("n_test"))
        sizes.finish()

        methods = top.take("methods")
        if not isinstance(methods, list) or not methods:
            raise InvalidSpecError("config.methods: need a non-empty list")
        for m in methods:
            if m not in METHODS:
                raise InvalidSpecError(
                    f"config.methods: unknown method {m!r} (choose from {', '.join(METHODS)})"
                )
        if len(set(methods)) != len(methods):
            raise InvalidSpecError("config.methods: duplicate entries")

        tr = _Section(top.take("train", {}), "config.train")
        train_options = {key: tr.take(key, default) for key, default in _TRAIN_DEFAULTS.items()}
        tr.finish()
        if train_options["dgan_checkpoints"] is not None:
            train_options["dgan_checkpoints"] = tuple(int(c) for c in train_options["dgan_checkpoints"])

        nets = _Section(top.take("networks", {}), "config.networks")
        gen = _Section(nets.take("generator", {}), "config.networks.generator")
        generator_options = {
            "hidden": [int(h) for h in gen.take("hidden", [64, 64])],
            "normalize": bool(gen.take("normalize", True)),
            "output": str(gen.take("output", "linear")),
        }
        gen.finish()
        if generator_options["output"] not in ("linear", "sigmoid"):
            raise InvalidSpecError("config.networks.generator.output: must be 'linear' or 'sigmoid'")
        cls = _Section(nets.take("classifier", {}), "config.networks.classifier")
        classifier_options = {
            "hidden": [int(h) for h in cls.take("hidden", [64, 64])],
            "spectral_norm": bool(cls.take("spectral_norm", True)),
            "dropout": float(cls.take("dropout", 0.0)),
            "leaky_slope": float(cls.take("leaky_slope", 0.2)),
        }
        cls.finish()
        nets.finish()
        top.finish()

        return ExperimentConfig(
            seed=seed,
            out_dir=out_dir,
            dataset=dataset,
            alpha=alpha,
            n_p=n_p,
            n_u=n_u,
            n_test=n_test,
            methods=tuple(methods),
            train_options=train_options,
            generator_options=generator_options,
            classifier_options=classifier_options,
        )

    def to_dict(self) -> dict:
        train = dict(self.train_options)
        if train["dgan_checkpoints"] is not None:
            train["dgan_checkpoints"] = list(train["dgan_checkpoints"])
        return {
            "schema_version": SCHEMA_VERSION,
            "seed": self.seed,
            "out_dir": self.out_dir,
            "dataset": self.dataset,
            "alpha": self.alpha,
            "sizes": {"n_p": self.n_p, "n_u": self.n_u, "n_test": self.n_test},
            "methods": list(self.methods),
            "train": train,
            "networks": {
                "generator": self.generator_options,
                "classifier": self.classifier_options,
            },
        }


def build_pool(config: ExperimentConfig, rng: np.random.Generator) -> LabeledPool:
    ds = config.dataset
    if ds["kind"] == "two_moons":
        return make_two_moons(ds["n"], ds["noise"], rng)
    if ds["kind"] == "gaussian_mixture":
        return make_gaussian_mixture(
            ds["means"], ds["covs"], ds["counts"], rng,
            positive_components=tuple(ds["positive_components"]),
        )
    return load_idx(
        ds["images"], ds["labels"],
        positive_labels=tuple(ds["positive_labels"]),
        downscale=ds["downscale"],
    )


def build_dataset(config: ExperimentConfig) -> PUDataset:
    """Pool construction and PU split, seeded from the experiment seed."""
    pool = build_pool(config, make_rng(config.seed, "data/pool"))
    return make_pu_split(
        pool, config.alpha, config.n_p, config.n_u, config.n_test,
        make_rng(config.seed, "data/split"),
    )


def classifier_network(feature_dim: int, options: dict) -> NetworkSpec:
    layers: list = []
    prev = feature_dim
    for width in options["hidden"]:
        layers.append(Dense(prev, width, spectral_norm=options["spectral_norm"]))
        layers.append(Activation("leaky_relu", slope=options["leaky_slope"]))
        prev = width
    if options["dropout"] > 0.0:
        layers.append(Dropout(options["dropout"]))
    layers.append(Dense(prev, 1))
    layers.append(Activation("sigmoid"))
    return NetworkSpec(tuple(layers))


def generator_network(latent_dim: int, feature_dim: int, options: dict) -> NetworkSpec:
    layers: list = []
    prev = latent_dim
    for width in options["hidden"]:
        layers.append(Dense(prev, width))
        if options["normalize"]:
            layers.append(Normalize())
        layers.append(Activation("relu"))
        prev = width
    layers.append(Dense(prev, feature_dim))
    if options["output"] == "sigmoid":
        layers.append(Activation("sigmoid"))
    return NetworkSpec(tuple(layers))


def build_train_config(config: ExperimentConfig, feature_dim: int, method_seed: int) -> TrainConfig:
    opts = config.train_options
    classifier = classifier_network(feature_dim, config.classifier_options)
    generator = generator_network(opts["latent_dim"], feature_dim, config.generator_options)
    return TrainConfig(
        generator=generator,
        discriminator=classifier,
        observer=classifier,
        seed=method_seed,
        **opts,
    )
