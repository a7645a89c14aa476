"""Numba acceleration switch.

Hot numeric kernels in this package are decorated with :func:`njit`. By
default that is ``numba.njit``; setting the environment variable
``QUADFC_DISABLE_NUMBA=1`` (or running without numba installed) replaces it
with an identity decorator so every kernel runs as plain NumPy/Python.

When numba is active, the original Python function remains reachable as
``fn.py_func``; :func:`python_impl` returns it either way, which is what the
kernel benchmark and the cross-check tests use to compare both paths.
"""

import os

NUMBA_ENABLED = False

if os.environ.get("QUADFC_DISABLE_NUMBA", "0") not in ("1", "true", "yes"):
    try:
        from numba import njit, prange

        NUMBA_ENABLED = True
    except ImportError:
        pass

if not NUMBA_ENABLED:

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(fn):
            return fn

        return wrap

    def prange(*args):
        return range(*args)


def python_impl(fn):
    """Return the pure-Python implementation behind a (possibly) jitted kernel."""
    return getattr(fn, "py_func", fn)
