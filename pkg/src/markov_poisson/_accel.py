"""Numba switch for the hot kernels.

Set ``MARKOV_POISSON_PURE_NUMPY=1`` before import to run every kernel on its
pure-numpy / pure-python path. The flag is read once, at import time.
"""
from __future__ import annotations

import os

_FALSY = ("", "0", "false", "no", "off")

PURE_NUMPY = os.environ.get("MARKOV_POISSON_PURE_NUMPY", "").strip().lower() not in _FALSY

try:
    import numba
    from numba import njit, prange
    HAVE_NUMBA = True
    if "NUMBA_THREADING_LAYER" not in os.environ:
        # the system TBB is often too old and only produces a warning
        numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not PURE_NUMPY


def maybe_njit(*args, **kwargs):
    """``numba.njit`` when acceleration is on, identity otherwise.

    The undecorated function stays reachable as ``.py_func`` in both modes so
    tests can pit the two paths against each other.
    """
    def wrap(fn):
        if USE_NUMBA:
            return njit(cache=True, **kwargs)(fn)
        fn.py_func = fn
        return fn

    if args and callable(args[0]):
        return wrap(args[0])
    return wrap


if not HAVE_NUMBA:  # pragma: no cover
    prange = range


def set_threads(threads: int | None) -> int:
    """Cap numba's worker pool; returns the count actually in effect."""
    if not USE_NUMBA or threads is None:
        return 1 if not USE_NUMBA else numba.get_num_threads()
    limit = numba.config.NUMBA_NUM_THREADS
    numba.set_num_threads(max(1, min(int(threads), limit)))
    return numba.get_num_threads()


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
