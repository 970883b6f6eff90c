"""Backend selection for the hot numeric kernels.

The environment variable ``STABLEMA_BACKEND`` picks the implementation:
``numba`` (default) JIT-compiles the inner loops, ``numpy`` runs the
vectorized fallbacks.  Both produce the same results up to floating-point
ordering; the fallback exists for environments without a working numba
and for benchmarking (see benchmarks/backend_bench.py).
"""

import os

_VALID = ("numba", "numpy")


def selected_backend() -> str:
    name = os.environ.get("STABLEMA_BACKEND", "numba").strip().lower()
    if name not in _VALID:
        raise ValueError(
            f"STABLEMA_BACKEND must be one of {_VALID}, got {name!r}"
        )
    if name == "numba":
        try:
            import numba  # noqa: F401
        except ImportError:
            name = "numpy"
    return name


BACKEND = selected_backend()
USE_NUMBA = BACKEND == "numba"
