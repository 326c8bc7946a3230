"""pulab: a deterministic positive-unlabeled learning laboratory.

Implements a three-network adversarial trainer (generator, discriminator,
observer) whose observer ends up as a positive-vs-negative classifier,
plus baseline methods, evaluation metrics, and a seeded experiment CLI.
"""

from ._kernels import BACKEND as kernel_backend

__version__ = "0.1.0"

__all__ = ["kernel_backend", "__version__"]
