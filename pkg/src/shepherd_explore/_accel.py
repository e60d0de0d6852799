"""Backend selection for the hot kernels.

Set ``SHEPHERD_EXPLORE_NUMBA=0`` to force the pure numpy/Python path even
when numba is importable. Both paths return identical results.
"""
from __future__ import annotations

import os

_FLAG = os.environ.get("SHEPHERD_EXPLORE_NUMBA", "1").strip().lower()

try:
    import numba  # noqa: F401

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in CI
    HAS_NUMBA = False

USE_NUMBA = HAS_NUMBA and _FLAG not in ("0", "false", "no", "off")


def njit(fn):
    """``numba.njit(cache=True)`` when numba is available, identity otherwise."""
    if not HAS_NUMBA:
        return fn
    from numba import njit as _njit

    return _njit(cache=True)(fn)


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
