"""Seeded experiment runner.

Subcommands:
  run       train every configured method, streaming per-epoch metrics CSVs
  compare   run >= 2 methods and emit an aligned comparison table
  gradcheck run the finite-difference verification matrix
  dump      train the three-network method to a given epoch and dump
            generated samples (with their latent draws) to CSV

All outputs are a pure function of (config, seed): per-method substreams
are derived from the experiment seed by label, so rerunning a config
reproduces every file byte for byte.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import train_dgan, train_naive_pu, train_supervised_oracle
from .config import ExperimentConfig, build_dataset, build_train_config
from .errors import DataFormatError, InvalidSpecError, NumericError, PulabError, UsageError
from .metrics import rolling_summary
from .nn import forward
from .seeding import derive_seed, make_rng
from .training import MetricsRecord, TrainConfig, train
from .verification import GRADCHECK_TOL, gradcheck_suite

CSV_COLUMNS = (
    "epoch",
    "loss_d",
    "loss_g",
    "loss_ob",
    "test_accuracy",
    "fd_gen_unlabeled",
    "fd_gen_positive",
)


def _fmt(value: float) -> str:
    return f"{value:.17g}"


def _record_row(rec: MetricsRecord) -> list:
    return [
        str(rec.epoch),
        _fmt(rec.loss_d),
        _fmt(rec.loss_g),
        _fmt(rec.loss_ob),
        _fmt(rec.test_accuracy),
        _fmt(rec.fd_gen_unlabeled),
        _fmt(rec.fd_gen_positive),
    ]


def _resolve_out(config: ExperimentConfig, out_arg) -> Path:
    out = out_arg or os.environ.get("PULAB_OUT") or config.out_dir
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _load_config(path, out_arg=None, seed_arg=None) -> ExperimentConfig:
    config = ExperimentConfig.from_file(path)
    if seed_arg is not None:
        config = dataclasses.replace(config, seed=int(seed_arg))
    if out_arg is not None:
        config = dataclasses.replace(config, out_dir=str(out_arg))
    return config


def _summary(method: str, history: list) -> dict:
    def window(n):
        if len(history) < n:
            return None
        mean, std = rolling_summary(history, n)
        return {"mean": mean, "std": std}

    return {
        "method": method,
        "epochs": len(history),
        "final_test_accuracy": history[-1].test_accuracy if history else None,
        "last_50": window(50),
        "last_100": window(100),
    }


def dump_samples(tcfg: TrainConfig, generator_store, n: int, path: Path, rng) -> None:
    """Write n generated feature rows to `path` and the latent draws that
    produced them to a sibling *_z.csv, both with 17-digit floats."""
    d = tcfg.generator.out_dim
    if n > 0:
        z = rng.standard_normal((n, tcfg.latent_dim))
        x = forward(tcfg.generator, generator_store, z, mode="eval").data
    else:
        z = np.zeros((0, tcfg.latent_dim))
        x = np.zeros((0, d))
    path = Path(path)
    z_path = path.with_name(path.stem + "_z" + path.suffix)
    try:
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow([f"x{i}" for i in range(d)])
            for row in x:
                writer.writerow([_fmt(v) for v in row])
        with open(z_path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow([f"z{i}" for i in range(tcfg.latent_dim)])
            for row in z:
                writer.writerow([_fmt(v) for v in row])
    except OSError as exc:
        raise PulabError(f"failed writing samples to {path}: {exc}") from exc


def _run_method(method: str, config: ExperimentConfig, data, out_dir: Path):
    """Train one method, streaming its metrics CSV. Returns the history."""
    tcfg = build_train_config(config, data.dim, derive_seed(config.seed, f"method/{method}"))
    csv_path = out_dir / f"{method}_metrics.csv"
    with open(csv_path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(CSV_COLUMNS)

        def on_epoch(rec: MetricsRecord) -> None:
            writer.writerow(_record_row(rec))
            f.flush()

        if method == "observer_gan":
            result = train(tcfg, data, on_epoch=on_epoch)
            history, generator = result.history, result.generator
        elif method == "dgan":
            result = train_dgan(data, tcfg, on_epoch=on_epoch)
            history, generator = result.history, result.generator
        elif method == "naive_pu":
            result = train_naive_pu(data, tcfg, on_epoch=on_epoch)
            history, generator = result.history, None
        else:
            result = train_supervised_oracle(data, tcfg, on_epoch=on_epoch)
            history, generator = result.history, None

    with open(out_dir / f"{method}_summary.json", "w") as f:
        json.dump(_summary(method, history), f, indent=2, sort_keys=True)
        f.write("\n")
    if generator is not None:
        dump_samples(
            tcfg,
            generator,
            tcfg.fd_samples,
            out_dir / f"{method}_samples_epoch{tcfg.epochs}.csv",
            make_rng(tcfg.seed, f"dump/{method}"),
        )
    return history


def cmd_run(config_path, out_arg=None, seed_arg=None) -> int:
    config = _load_config(config_path, out_arg, seed_arg)
    out_dir = _resolve_out(config, out_arg)
    with open(out_dir / "config_resolved.json", "w") as f:
        json.dump(config.to_dict(), f, indent=2, sort_keys=True)
        f.write("\n")
    data = build_dataset(config)
    for method in config.methods:
        _run_method(method, config, data, out_dir)
        print(f"{method}: done ({out_dir / (method + '_metrics.csv')})")
    return 0


def cmd_compare(config_path, out_arg=None, seed_arg=None) -> int:
    config = _load_config(config_path, out_arg, seed_arg)
    if len(config.methods) < 2:
        raise InvalidSpecError("compare needs at least two methods in config.methods")
    out_dir = _resolve_out(config, out_arg)
    with open(out_dir / "config_resolved.json", "w") as f:
        json.dump(config.to_dict(), f, indent=2, sort_keys=True)
        f.write("\n")
    data = build_dataset(config)
    summaries = {}
    for method in config.methods:
        history = _run_method(method, config, data, out_dir)
        summaries[method] = _summary(method, history)

    dataset_name = config.dataset["kind"]
    headers = ["dataset"]
    for method in config.methods:
        headers += [f"{method}@50", f"{method}@100"]

    def cell(method, key):
        window = summaries[method][key]
        if window is None:
            return "n/a"
        return f"{100 * window['mean']:.2f} ± {100 * window['std']:.2f}"

    row = [dataset_name]
    for method in config.methods:
        row += [cell(method, "last_50"), cell(method, "last_100")]
    widths = [max(len(h), len(v)) for h, v in zip(headers, row)]
    lines = [
        "  ".join(h.ljust(w) for h, w in zip(headers, widths)),
        "  ".join("-" * w for w in widths),
        "  ".join(v.ljust(w) for v, w in zip(row, widths)),
    ]
    table = "\n".join(lines) + "\n"
    with open(out_dir / "comparison.txt", "w") as f:
        f.write(table)
    with open(out_dir / "comparison.json", "w") as f:
        json.dump({"dataset": dataset_name, "methods": summaries}, f, indent=2, sort_keys=True)
        f.write("\n")
    print(table, end="")
    return 0


def cmd_gradcheck() -> int:
    results = gradcheck_suite()
    ok = True
    for label, err in results:
        status = "ok" if err < GRADCHECK_TOL else "FAIL"
        ok = ok and err < GRADCHECK_TOL
        print(f"{status:4s} {label}: max relative error {err:.3e} (tol {GRADCHECK_TOL:g})")
    return 0 if ok else 1


def cmd_dump(config_path, epoch: int, count: int, out_arg=None, seed_arg=None) -> int:
    config = _load_config(config_path, out_arg, seed_arg)
    out_dir = _resolve_out(config, out_arg)
    if epoch < 1:
        raise InvalidSpecError("--epoch must be >= 1")
    data = build_dataset(config)
    tcfg = build_train_config(
        config, data.dim, derive_seed(config.seed, "method/observer_gan")
    )
    tcfg = dataclasses.replace(tcfg, epochs=epoch)
    result = train(tcfg, data)
    path = out_dir / f"samples_epoch{epoch}.csv"
    dump_samples(tcfg, result.generator, count, path, make_rng(tcfg.seed, "dump/observer_gan"))
    print(f"wrote {path}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="pulab", description="Deterministic positive-unlabeled learning experiments"
    )
    parser.add_argument("--version", action="version", version=f"pulab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="train all configured methods")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", default=None)
    p_run.add_argument("--seed", type=int, default=None)

    p_cmp = sub.add_parser("compare", help="run methods and tabulate accuracy summaries")
    p_cmp.add_argument("--config", required=True)
    p_cmp.add_argument("--out", default=None)
    p_cmp.add_argument("--seed", type=int, default=None)

    sub.add_parser("gradcheck", help="finite-difference check of the autodiff engine")

    p_dump = sub.add_parser("dump", help="dump generated samples at a given epoch")
    p_dump.add_argument("--config", required=True)
    p_dump.add_argument("--epoch", type=int, required=True)
    p_dump.add_argument("--count", type=int, default=512)
    p_dump.add_argument("--out", default=None)
    p_dump.add_argument("--seed", type=int, default=None)

    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args.config, args.out, args.seed)
        if args.command == "compare":
            return cmd_compare(args.config, args.out, args.seed)
        if args.command == "gradcheck":
            return cmd_gradcheck()
        return cmd_dump(args.config, args.epoch, args.count, args.out, args.seed)
    except json.JSONDecodeError as exc:
        print(f"error: config parse failed: {exc}", file=sys.stderr)
        return 2
    except (InvalidSpecError, DataFormatError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"error: training aborted: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
