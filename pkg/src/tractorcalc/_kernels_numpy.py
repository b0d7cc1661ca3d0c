"""Pure-numpy reference kernels for jet arithmetic.

The multiplication table is sorted by result slot, so the truncated
convolution is a gather, an elementwise product, and a segmented sum via
``np.add.reduceat``.  Batches are chunked to bound the size of the gathered
intermediate.
"""

from __future__ import annotations

import numpy as np

_CHUNK_ELEMENTS = 1 << 23


def mul_table(a, b, ti, tj, tk, kvals, starts, out):
    """out[r, tk[t]] += a[r, ti[t]] * b[r, tj[t]] for every row r and entry t."""
    if ti.size == 0:
        return out
    rows = a.shape[0]
    step = max(1, _CHUNK_ELEMENTS // ti.size)
    for lo in range(0, rows, step):
        hi = min(rows, lo + step)
        prod = a[lo:hi, ti] * b[lo:hi, tj]
        out[lo:hi, kvals] += np.add.reduceat(prod, starts, axis=1)
    return out
