"""Compare the compiled and numpy kernel backends.

Times the individual kernels at training-typical shapes, then a full
three-network training epoch under each backend. Run from the repo root:

    python3 benchmarks/bench_kernels.py [--batch 64] [--width 64] [--repeat 200]
"""

from __future__ import annotations

import argparse
import time

import numpy as np


def load_backends():
    backends = {}
    from pulab._kernels import _pykern

    backends["python"] = _pykern
    try:
        from pulab._kernels import _ckern

        backends["compiled"] = _ckern
    except ImportError:
        pass
    return backends


def time_call(fn, repeat):
    fn()  # warm up
    start = time.perf_counter()
    for _ in range(repeat):
        fn()
    return (time.perf_counter() - start) / repeat


def micro_benchmarks(backends, batch, width, repeat):
    rng = np.random.default_rng(0)
    x = rng.standard_normal((batch, width))
    w = rng.standard_normal((width, width))
    b = rng.standard_normal(width)
    gy = rng.standard_normal((batch, width))
    p = rng.random(batch)
    t = (rng.random(batch) > 0.5).astype(float)
    value = rng.standard_normal(width * width)
    grad = rng.standard_normal(width * width)
    m = np.zeros(width * width)
    v = np.zeros(width * width)

    cases = {
        "dense_fwd": lambda K: K.dense_fwd(x, w, b),
        "dense_bwd": lambda K: K.dense_bwd(x, w, gy, True, True),
        "leaky_relu_fwd": lambda K: K.leaky_relu_fwd(x, 0.2),
        "sigmoid_fwd": lambda K: K.sigmoid_fwd(x),
        "bce_fwd": lambda K: K.bce_fwd(p, t, None, 1e-7),
        "adam_update": lambda K: K.adam_update(value, grad, m, v, 1, 2e-4, 0.5, 0.999, 1e-8),
    }
    print(f"\nper-kernel timings, batch={batch}, width={width} (microseconds/call)")
    header = f"{'kernel':<16}" + "".join(f"{name:>12}" for name in backends)
    print(header)
    for label, fn in cases.items():
        row = f"{label:<16}"
        for name, mod in backends.items():
            us = time_call(lambda: fn(mod), repeat) * 1e6
            row += f"{us:12.2f}"
        print(row)

    if len(backends) == 2:
        ks = list(backends.values())
        ya = ks[0].dense_fwd(x, w, b)
        yb = ks[1].dense_fwd(x, w, b)
        print(f"\nmax |python - compiled| on dense_fwd: {np.abs(ya - yb).max():.3e}")


def epoch_benchmark(backend_name, batch, width):
    """One full three-network training epoch under the selected backend.

    Runs in a subprocess so the backend choice via PULAB_KERNELS applies at
    import time.
    """
    import os
    import subprocess
    import sys

    code = f"""
import time
from pulab.config import ExperimentConfig, build_dataset, build_train_config
from pulab.training import train
import pulab

cfg = ExperimentConfig.from_dict({{
    "schema_version": 1, "seed": 0, "out_dir": "/tmp/bench",
    "dataset": {{"kind": "two_moons", "n": 6000, "noise": 0.1}},
    "alpha": 0.5, "sizes": {{"n_p": 1000, "n_u": 2000, "n_test": 1000}},
    "methods": ["observer_gan"],
    "train": {{"epochs": 10, "batch_k": {batch}, "latent_dim": 100, "reinit_period": 0}},
    "networks": {{"generator": {{"hidden": [{width}, {width}], "normalize": True, "output": "linear"}},
                  "classifier": {{"hidden": [{width}, {width}], "spectral_norm": False, "dropout": 0.0}}}},
}})
data = build_dataset(cfg)
tcfg = build_train_config(cfg, data.dim, 0)
start = time.perf_counter()
train(tcfg, data)
print(f"{{pulab.kernel_backend}}: {{(time.perf_counter() - start) / 10 * 1000:.1f}} ms/epoch")
"""
    env = dict(os.environ, PULAB_KERNELS=backend_name)
    subprocess.run([sys.executable, "-c", code], env=env, check=True)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--batch", type=int, default=64)
    parser.add_argument("--width", type=int, default=64)
    parser.add_argument("--repeat", type=int, default=200)
    args = parser.parse_args()

    backends = load_backends()
    print(f"available backends: {', '.join(backends)}")
    micro_benchmarks(backends, args.batch, args.width, args.repeat)

    print("\nfull training epoch (10-epoch average, two-moons config):")
    for name in backends:
        epoch_benchmark(name, args.batch, args.width)


if __name__ == "__main__":
    main()
