"""Numba dispatch.

Set ``BESOVCH_NUMBA=0`` to force the pure-numpy kernels (useful for
debugging and for the benchmark comparison).  When numba is missing the
numpy path is used silently.
"""
import os

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None


def numba_enabled():
    flag = os.environ.get("BESOVCH_NUMBA", "1").strip().lower()
    return numba is not None and flag not in ("0", "false", "no", "off")


def njit(func):
    """Compile with ``numba.njit(cache=True)`` when available, else return ``func``."""
    if numba is None:
        return func
    return numba.njit(cache=True)(func)
