"""Multi-index tables for truncated Taylor (jet) arithmetic.

A jet space is the set of real polynomials in ``dim`` variables truncated at
total degree ``order``, stored densely in graded-lexicographic layout: all
multi-indices of degree 0, then degree 1, ... each degree block sorted
lexicographically.  Entry 0 is always the constant term.

Jet multiplication is a truncated convolution.  It is driven by a
precomputed triple table ``(ti, tj, tk)``: ``out[tk] += a[ti] * b[tj]`` over
all pairs of multi-indices whose degrees sum to at most ``order``.  The table
is sorted by the degree of the result so that a prefix of it computes a
product truncated at any lower degree, and so that equal ``tk`` runs are
contiguous (which lets the numpy backend use ``add.reduceat``).

A space may carry a second, "outer" grading in the same variables (used to
differentiate quantities that are themselves built from jets, e.g. fields of
curvature values).  Coefficients then live on pairs (inner index, outer
index) flattened row-major, and the product table is the cross product of
the inner and outer tables.  All kernels are shared between the two layouts.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from math import factorial

import numpy as np

MAX_ORDER = 4


def multi_indices(dim: int, order: int) -> np.ndarray:
    """All exponent vectors with |alpha| <= order, graded-lex, shape (N, dim)."""
    rows = []
    for total in range(order + 1):
        rows.extend(sorted(_compositions(total, dim)))
    return np.array(rows, dtype=np.int64).reshape(len(rows), dim)


def _compositions(total, dim):
    if dim == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for rest in _compositions(total - head, dim - 1):
            yield (head,) + rest


def space_size(dim: int, order: int) -> int:
    num = 1
    for i in range(1, dim + 1):
        num = num * (order + i) // i
    return num


@dataclass(frozen=True)
class MulTable:
    """Sorted convolution triples plus per-degree prefix bookkeeping."""

    ti: np.ndarray
    tj: np.ndarray
    tk: np.ndarray
    # prefix_len[g] = number of leading entries whose result degree is <= g
    prefix_len: np.ndarray
    # for each degree prefix: the distinct result slots and group starts,
    # aligned with the sorted table (numpy reduceat path)
    kvals: tuple
    starts: tuple


@dataclass(frozen=True)
class JetSpace:
    """Dense coefficient layout and operation tables for one (dim, orders)."""

    dim: int
    order: int
    outer_order: int = 0
    exps: np.ndarray = field(repr=False, default=None)
    index: dict = field(repr=False, default=None)
    ncoeff: int = 0
    inner_size: int = 0
    outer_size: int = 0
    total_order: int = 0
    mul: MulTable = field(repr=False, default=None)
    # dshift[a] = (dst, src, fac): Taylor coefficients of the a-th partial
    dshift: tuple = field(repr=False, default=None)
    alpha_factorial: np.ndarray = field(repr=False, default=None)

    def index_of(self, alpha) -> int:
        if self.outer_order:
            inner, outer = alpha
            return self.index[(tuple(int(x) for x in inner), tuple(int(x) for x in outer))]
        return self.index[tuple(int(x) for x in alpha)]

    def inner_block(self, arr: np.ndarray, alpha) -> np.ndarray:
        """Outer-jet coefficients sitting at inner multi-index alpha."""
        i = jet_space(self.dim, self.order).index_of(alpha)
        return arr[..., i * self.outer_size:(i + 1) * self.outer_size]

    def zeros(self, *lead_shape) -> np.ndarray:
        return np.zeros(lead_shape + (self.ncoeff,), dtype=np.float64)

    def constant(self, values) -> np.ndarray:
        values = np.asarray(values, dtype=np.float64)
        out = np.zeros(values.shape + (self.ncoeff,), dtype=np.float64)
        out[..., 0] = values
        return out

    def coordinate(self, index: int, base_value: float) -> np.ndarray:
        """Jet of the coordinate function x^index about the base point.

        With an outer grading the coordinate is seeded in both gradings, so
        that inner coefficients of any computed quantity become outer jets of
        that quantity as a function of the base point.
        """
        out = np.zeros(self.ncoeff, dtype=np.float64)
        out[0] = base_value
        e = tuple(1 if a == index else 0 for a in range(self.dim))
        zero = (0,) * self.dim
        if self.order >= 1:
            out[self.index_of((e, zero) if self.outer_order else e)] = 1.0
        if self.outer_order >= 1:
            out[self.index_of((zero, e))] = 1.0
        return out

    def seed_point(self, point) -> np.ndarray:
        """Coordinate jets for every coordinate, shape (dim, ncoeff)."""
        point = np.asarray(point, dtype=np.float64)
        return np.stack([self.coordinate(i, point[i]) for i in range(self.dim)])


def _plain_tables(dim, order):
    exps = multi_indices(dim, order)
    n = exps.shape[0]
    index = {tuple(row): i for i, row in enumerate(exps.tolist())}
    degree = exps.sum(axis=1)

    ti, tj, tk = [], [], []
    for i in range(n):
        di = degree[i]
        for j in range(n):
            if di + degree[j] <= order:
                ti.append(i)
                tj.append(j)
                tk.append(index[tuple((exps[i] + exps[j]).tolist())])
    ti = np.array(ti, dtype=np.int64)
    tj = np.array(tj, dtype=np.int64)
    tk = np.array(tk, dtype=np.int64)
    return exps, index, degree, ti, tj, tk


def _sort_and_wrap(ti, tj, tk, result_degree, order):
    srt = np.lexsort((ti, tk, result_degree))
    ti, tj, tk, rdeg = ti[srt], tj[srt], tk[srt], result_degree[srt]
    prefix_len = np.array([int(np.searchsorted(rdeg, g, side="right")) for g in range(order + 1)])
    kvals, starts = [], []
    for g in range(order + 1):
        m = prefix_len[g]
        if m == 0:
            kvals.append(np.array([], dtype=np.int64))
            starts.append(np.array([], dtype=np.int64))
            continue
        ks = tk[:m]
        boundary = np.flatnonzero(np.diff(ks)) + 1
        starts.append(np.concatenate(([0], boundary)))
        kvals.append(ks[np.concatenate(([0], boundary))])
    return MulTable(ti, tj, tk, prefix_len, tuple(kvals), tuple(starts))


def _partial_tables(exps, index, ncoeff, dim, combined_outer=None):
    """Per-direction (dst, src, fac) triples for inner partial derivatives."""
    shifts = []
    for a in range(dim):
        dst, src, fac = [], [], []
        for i, row in enumerate(exps.tolist()):
            alpha = list(row)
            if alpha[a] == 0:
                continue
            alpha[a] -= 1
            dst.append(index[tuple(alpha)])
            src.append(i)
            fac.append(row[a])
        shifts.append((np.array(dst, dtype=np.int64),
                       np.array(src, dtype=np.int64),
                       np.array(fac, dtype=np.float64)))
    return tuple(shifts)


@lru_cache(maxsize=None)
def jet_space(dim: int, order: int, outer_order: int = 0) -> JetSpace:
    if not 0 <= order <= MAX_ORDER:
        raise ValueError(f"jet order must be between 0 and {MAX_ORDER}, got {order}")
    if dim < 1:
        raise ValueError(f"dimension must be positive, got {dim}")

    exps_in, index_in, deg_in, ti, tj, tk = _plain_tables(dim, order)
    n_in = exps_in.shape[0]

    if outer_order == 0:
        mul = _sort_and_wrap(ti, tj, tk, deg_in[tk], order)
        dshift = _partial_tables(exps_in, index_in, n_in, dim)
        alpha_fact = np.array([np.prod([factorial(int(e)) for e in row]) for row in exps_in],
                              dtype=np.float64)
        return JetSpace(dim, order, 0, exps_in, index_in, n_in, n_in, 1, order,
                        mul, dshift, alpha_fact)

    exps_out, index_out, deg_out, oi, oj, ok = _plain_tables(dim, outer_order)
    n_out = exps_out.shape[0]

    # combined layout: flat index = inner * n_out + outer
    pairs = {}
    for i in range(n_in):
        for o in range(n_out):
            pairs[(tuple(exps_in[i].tolist()), tuple(exps_out[o].tolist()))] = i * n_out + o
    cti = (ti[:, None] * n_out + oi[None, :]).ravel()
    ctj = (tj[:, None] * n_out + oj[None, :]).ravel()
    ctk = (tk[:, None] * n_out + ok[None, :]).ravel()
    # prefix truncation tracks the inner degree only; the outer grading is
    # always carried in full
    rdeg = deg_in[tk][:, None].repeat(oi.size, axis=1).ravel()
    mul = _sort_and_wrap(cti, ctj, ctk, rdeg, order)

    # inner partials act blockwise on outer-jet coefficients
    base = _partial_tables(exps_in, index_in, n_in, dim)
    offs = np.arange(n_out, dtype=np.int64)
    dshift = tuple(((d[:, None] * n_out + offs).ravel(),
                    (s[:, None] * n_out + offs).ravel(),
                    f[:, None].repeat(n_out, axis=1).ravel()) for d, s, f in base)

    fact_in = np.array([np.prod([factorial(int(e)) for e in row]) for row in exps_in])
    fact_out = np.array([np.prod([factorial(int(e)) for e in row]) for row in exps_out])
    alpha_fact = (fact_in[:, None] * fact_out[None, :]).ravel().astype(np.float64)

    return JetSpace(dim, order, outer_order, None, pairs, n_in * n_out, n_in, n_out,
                    order + outer_order, mul, dshift, alpha_fact)
