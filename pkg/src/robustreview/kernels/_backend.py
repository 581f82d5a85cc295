"""Backend selection for the hot numeric kernels.

Set ROBUSTREVIEW_BACKEND=numpy to force the pure-Python/numpy fallback,
ROBUSTREVIEW_BACKEND=numba to require numba (ImportError if missing).
Default ("auto"): numba when importable, fallback otherwise.

The choice is fixed at import time; run benchmarks/bench_backends.py to
compare both in subprocesses.
"""

import os

_env = os.environ.get("ROBUSTREVIEW_BACKEND", "auto").strip().lower() or "auto"
if _env not in ("auto", "numba", "numpy"):
    raise RuntimeError(
        f"ROBUSTREVIEW_BACKEND must be 'auto', 'numba' or 'numpy', got {_env!r}"
    )

if _env == "numpy":
    USE_NUMBA = False
else:
    try:
        import numba  # noqa: F401

        USE_NUMBA = True
    except ImportError:
        if _env == "numba":
            raise
        USE_NUMBA = False

if USE_NUMBA:
    import numba

    def jit(func):
        return numba.njit(cache=True)(func)

else:

    def jit(func):
        return func


BACKEND = "numba" if USE_NUMBA else "numpy"
