"""Numba-compiled jet arithmetic kernels.

Same contract as the pure-numpy module; the table walk is a tight loop per
batch row, which keeps all access row-local.
"""

from __future__ import annotations

import numba
import numpy as np


@numba.njit(cache=True, fastmath=False)
def _mul_loop(a, b, ti, tj, tk, out):
    rows = a.shape[0]
    nt = ti.shape[0]
    for r in range(rows):
        ar = a[r]
        br = b[r]
        orow = out[r]
        for t in range(nt):
            orow[tk[t]] += ar[ti[t]] * br[tj[t]]
    return out


def mul_table(a, b, ti, tj, tk, kvals, starts, out):
    return _mul_loop(a, b, ti, tj, tk, out)
