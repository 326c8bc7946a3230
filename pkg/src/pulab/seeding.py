"""Label-keyed seed derivation.

A single experiment seed fans out into independent substreams, one per
(method, purpose) label. Each derived seed depends only on the root seed and
its own label chain, so adding or removing a method never perturbs the
randomness any other method sees.

Scheme: fold each label into the running state with FNV-1a, then scramble
with the splitmix64 finalizer. Derived seeds feed numpy PCG64 generators.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def _fnv1a(label: str) -> int:
    h = 0xCBF29CE484222325
    for byte in label.encode("utf-8"):
        h = ((h ^ byte) * 0x100000001B3) & _MASK
    return h


def derive_seed(root: int, *labels: str) -> int:
    """Derive a 64-bit seed from `root` and a chain of string labels."""
    x = root & _MASK
    for label in labels:
        x = splitmix64(x ^ _fnv1a(label))
    return x


def make_rng(root: int, *labels: str) -> np.random.Generator:
    """A PCG64 generator seeded from the derived stream."""
    return np.random.Generator(np.random.PCG64(derive_seed(root, *labels)))
