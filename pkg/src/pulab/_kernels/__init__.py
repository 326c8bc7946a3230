"""Kernel backend selection.

The compiled Cython backend is used when the extension built; otherwise the
numpy fallback takes over. Set PULAB_KERNELS=python or PULAB_KERNELS=compiled
to force a choice (forcing "compiled" raises if the extension is missing).
Both backends expose the same functions; see benchmarks/bench_kernels.py for
a speed comparison.
"""

from __future__ import annotations

import os

_choice = os.environ.get("PULAB_KERNELS", "auto").strip().lower()

if _choice in ("", "auto"):
    try:
        from . import _ckern as _impl
    except ImportError:
        from . import _pykern as _impl
elif _choice in ("compiled", "c", "cython"):
    from . import _ckern as _impl
elif _choice in ("python", "py", "numpy"):
    from . import _pykern as _impl
else:
    raise RuntimeError(
        f"PULAB_KERNELS={_choice!r} not understood; use 'auto', 'compiled' or 'python'"
    )

BACKEND = _impl.BACKEND

dense_fwd = _impl.dense_fwd
dense_bwd = _impl.dense_bwd
relu_fwd = _impl.relu_fwd
relu_bwd = _impl.relu_bwd
leaky_relu_fwd = _impl.leaky_relu_fwd
leaky_relu_bwd = _impl.leaky_relu_bwd
sigmoid_fwd = _impl.sigmoid_fwd
sigmoid_bwd = _impl.sigmoid_bwd
bce_fwd = _impl.bce_fwd
bce_bwd = _impl.bce_bwd
adam_update = _impl.adam_update
