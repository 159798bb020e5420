"""Backend selection for the hot network kernels.

Two interchangeable implementations exist:

* ``jit`` -- numba-compiled loops (default when numba is importable)
* ``reference`` -- pure numpy, used as fallback and as the semantic oracle

Set the environment variable ``SCHWARZPINN_BACKEND`` to ``numpy`` or
``numba`` to force one; the choice is made once at import time.  Run
``benchmarks/bench_backends.py`` to compare them on your machine.
"""

from __future__ import annotations

import os

from . import reference

_requested = os.environ.get("SCHWARZPINN_BACKEND", "").strip().lower()

if _requested in ("numpy", "reference"):
    _impl = reference
elif _requested in ("numba", "jit"):
    from . import jit as _impl
else:
    if _requested:
        raise ValueError(
            f"SCHWARZPINN_BACKEND={_requested!r} not recognized; "
            "use 'numba' or 'numpy'"
        )
    try:
        from . import jit as _impl
    except ImportError:
        _impl = reference

BACKEND = _impl.NAME
values_batch = _impl.values_batch
jets_batch = _impl.jets_batch
term_loss_grad = _impl.term_loss_grad
