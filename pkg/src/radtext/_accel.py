"""Backend selection for the hot numeric kernels.

Kernels in :mod:`radtext._kernels` are JIT-compiled with numba when it is
available.  Setting ``RADTEXT_DISABLE_NUMBA=1`` in the environment (or any
value other than ``0``/empty) forces the pure-numpy fallback: the same
source runs undecorated, so the two paths compute identical results and
differ only in speed.  ``benchmarks/bench_backends.py`` compares them.
"""

import os

DISABLE_ENV_VAR = "RADTEXT_DISABLE_NUMBA"


def _plain(*args, **kwargs):
    """Identity stand-in for numba.njit."""
    if args and callable(args[0]):
        return args[0]

    def decorate(func):
        return func

    return decorate


def _numba_disabled() -> bool:
    return os.environ.get(DISABLE_ENV_VAR, "").strip() not in ("", "0")


if _numba_disabled():
    NUMBA_ENABLED = False
    njit = _plain
else:
    try:
        from numba import njit

        NUMBA_ENABLED = True
    except ImportError:
        NUMBA_ENABLED = False
        njit = _plain


def backend_name() -> str:
    return "numba" if NUMBA_ENABLED else "numpy"
