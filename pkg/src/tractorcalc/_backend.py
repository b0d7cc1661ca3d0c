"""Kernel backend selection.

``TRACTORCALC_BACKEND=numpy`` forces the pure-numpy kernels;
``TRACTORCALC_BACKEND=numba`` requires numba.  Unset, numba is used when it
imports and numpy otherwise.
"""

from __future__ import annotations

import os

_requested = os.environ.get("TRACTORCALC_BACKEND", "").strip().lower()

if _requested not in ("", "numba", "numpy"):
    raise ImportError(f"TRACTORCALC_BACKEND must be 'numba' or 'numpy', got {_requested!r}")

if _requested == "numpy":
    from . import _kernels_numpy as _impl
else:
    try:
        from . import _kernels_numba as _impl
    except ImportError:
        if _requested == "numba":
            raise
        from . import _kernels_numpy as _impl

mul_table = _impl.mul_table


def backend_name() -> str:
    return "numba" if _impl.__name__.endswith("numba") else "numpy"
