"""Numba switch.

Hot kernels are written once as plain loops and compiled with numba when it
is importable and ``GHZREP_PURE`` is unset. With ``GHZREP_PURE=1`` the
package uses the vectorized numpy implementations in :mod:`ghzrep.kernels`
instead, which is also the path taken when numba is missing.
"""
import logging
import os

try:
    import numba
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None

USE_NUMBA = numba is not None and os.environ.get("GHZREP_PURE", "0") in ("", "0")

if numba is not None:
    logging.getLogger("numba").setLevel(logging.WARNING)


def njit(*args, **kwargs):
    """``numba.njit`` when available, identity otherwise."""
    if numba is None:
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f
    return numba.njit(*args, **kwargs)


def backend():
    return "numba" if USE_NUMBA else "numpy"
