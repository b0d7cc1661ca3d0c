"""Truncated Taylor-series (jet) arithmetic in d variables, order <= 4.

Coefficients are Taylor coefficients, i.e. ``derivative / alpha!``; the
``derivative`` accessor multiplies the factorial back.  Storage is dense
graded-lexicographic (see ``_tables``).  Every derivative consumed by the
curvature pipeline is taken from these jets, so there is no finite-difference
error anywhere downstream.

Two layers live here:

* raw helpers (``jmul``, ``jdiv``, ``jpartial``, ``jet_matrix_inverse``,
  ``jcompose`` ...) acting on plain ``(..., ncoeff)`` arrays against a
  ``JetSpace`` — the workhorses of the geometry pipeline, batched over
  tensor components;
* the ``Jet`` value class plus ``variable`` / ``combine`` / ``elementary`` /
  ``derivative``, a scalar facade over the same kernels.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np

from . import _backend
from ._tables import MAX_ORDER, JetSpace, jet_space
from .errors import ArgumentError, SingularityError, TruncationError

__all__ = [
    "Jet", "variable", "combine", "elementary", "derivative",
    "jet_space", "jmul", "jdiv", "jrecip", "jpartial", "jcompose",
    "jet_matrix_inverse", "backend_name",
]

backend_name = _backend.backend_name


# ---------------------------------------------------------------------------
# raw array layer
# ---------------------------------------------------------------------------

def _as_rows(space, a, b):
    shape = np.broadcast_shapes(a.shape[:-1], b.shape[:-1])
    n = space.ncoeff
    a = np.ascontiguousarray(np.broadcast_to(a, shape + (n,))).reshape(-1, n)
    b = np.ascontiguousarray(np.broadcast_to(b, shape + (n,))).reshape(-1, n)
    return shape, a, b


def jmul(space: JetSpace, a: np.ndarray, b: np.ndarray, order: int | None = None) -> np.ndarray:
    """Truncated product of two jet coefficient arrays (leading axes broadcast).

    ``order`` truncates the inner degree of the result below the space order,
    which skips the corresponding tail of the convolution table.
    """
    cut = space.order if order is None else min(order, space.order)
    shape, ar, br = _as_rows(space, a, b)
    out = np.zeros_like(ar)
    t = space.mul
    m = t.prefix_len[cut]
    _backend.mul_table(ar, br, t.ti[:m], t.tj[:m], t.tk[:m],
                       t.kvals[cut], t.starts[cut], out)
    return out.reshape(shape + (space.ncoeff,))


def jpartial(space: JetSpace, a: np.ndarray, direction: int) -> np.ndarray:
    """Coefficients of the partial derivative along ``direction`` (inner grading)."""
    dst, src, fac = space.dshift[direction]
    out = np.zeros_like(a)
    out[..., dst] = a[..., src] * fac
    return out


def _taylor_coeffs(fn, a0, m, power=None):
    """Univariate Taylor coefficients f^(j)(a0)/j! for j <= m, vectorized."""
    a0 = np.asarray(a0, dtype=np.float64)
    c = np.zeros(a0.shape + (m + 1,))
    j = np.arange(m + 1)
    if fn == "exp":
        c[...] = np.exp(a0)[..., None] / np.array([factorial(int(v)) for v in j])
    elif fn == "log":
        if np.any(a0 <= 0):
            raise SingularityError("log needs a positive constant term")
        c[..., 0] = np.log(a0)
        for jj in range(1, m + 1):
            c[..., jj] = (-1.0) ** (jj + 1) / (jj * a0 ** jj)
    elif fn in ("sqrt", "pow"):
        r = 0.5 if fn == "sqrt" else float(power)
        if np.any(a0 <= 0):
            raise SingularityError(f"{fn} needs a positive constant term")
        binom = 1.0
        for jj in range(m + 1):
            c[..., jj] = binom * a0 ** (r - jj)
            binom = binom * (r - jj) / (jj + 1)
    elif fn in ("sin", "cos"):
        cyc = [np.sin(a0), np.cos(a0), -np.sin(a0), -np.cos(a0)]
        off = 0 if fn == "sin" else 1
        for jj in range(m + 1):
            c[..., jj] = cyc[(jj + off) % 4] / factorial(jj)
    else:
        raise ArgumentError(f"unknown elementary function {fn!r}")
    return c


def jcompose(space: JetSpace, a: np.ndarray, fn: str, power=None) -> np.ndarray:
    """fn(a) by univariate Taylor composition, exact to the truncation order.

    Integer powers with a non-negative exponent are expanded by repeated
    multiplication, which has no positivity requirement.
    """
    if fn == "pow" and power is not None and float(power).is_integer():
        n = int(power)
        out = space.constant(np.ones(a.shape[:-1]))
        for _ in range(abs(n)):
            out = jmul(space, out, a)
        return jrecip(space, out) if n < 0 else out
    m = space.total_order
    coeffs = _taylor_coeffs(fn, a[..., 0], m, power)
    abar = a.copy()
    abar[..., 0] = 0.0
    out = space.constant(coeffs[..., m])
    for j in range(m - 1, -1, -1):
        out = jmul(space, out, abar)
        out[..., 0] += coeffs[..., j]
    return out


def jrecip(space: JetSpace, b: np.ndarray) -> np.ndarray:
    b0 = b[..., 0]
    if np.any(b0 == 0.0):
        raise SingularityError("division by a jet with zero constant term")
    m = space.total_order
    j = np.arange(m + 1)
    coeffs = (-1.0) ** j / b0[..., None] ** (j + 1)
    bbar = b.copy()
    bbar[..., 0] = 0.0
    out = space.constant(coeffs[..., m])
    for jj in range(m - 1, -1, -1):
        out = jmul(space, out, bbar)
        out[..., 0] += coeffs[..., jj]
    return out


def jdiv(space: JetSpace, a: np.ndarray, b: np.ndarray, order: int | None = None) -> np.ndarray:
    return jmul(space, a, jrecip(space, b), order)


def jet_matrix_inverse(space: JetSpace, mat: np.ndarray) -> np.ndarray:
    """Inverse of a (d, d, ncoeff) jet-valued matrix.

    The constant term is inverted numerically; the jet correction is the
    truncated Neumann series of A0^{-1} (A - A0), which is nilpotent at the
    total truncation order.
    """
    d = mat.shape[0]
    a0 = mat[..., 0]
    try:
        inv0 = np.linalg.inv(a0)
    except np.linalg.LinAlgError as exc:
        raise SingularityError("singular matrix constant term") from exc
    bar = mat.copy()
    bar[..., 0] = 0.0
    # m[i,j] = inv0[i,k] bar[k,j]: zero constant term
    m = np.einsum("ik,kj...->ij...", inv0, bar)
    acc = space.constant(np.eye(d))
    term = space.constant(np.eye(d))
    for _ in range(space.total_order):
        # term <- -m @ term  (jet matrix product)
        term = -np.sum(jmul(space, m[:, :, None, :], term[None, :, :, :]), axis=1)
        acc = acc + term
    return np.einsum("ij...,jk->ik...", acc, inv0)


# ---------------------------------------------------------------------------
# scalar facade
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Jet:
    """Immutable truncated Taylor expansion of a scalar about a base point.

    ``outer_order`` > 0 selects the doubly graded layout of ``_tables``; all
    arithmetic goes through the same kernels either way.
    """

    dim: int
    order: int
    coeffs: np.ndarray
    outer_order: int = 0

    def __post_init__(self):
        space = jet_space(self.dim, self.order, self.outer_order)
        arr = np.asarray(self.coeffs, dtype=np.float64)
        if arr.shape != (space.ncoeff,):
            raise ArgumentError(
                f"expected {space.ncoeff} coefficients for dim={self.dim} "
                f"order={self.order}, got shape {arr.shape}")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "coeffs", arr)

    @property
    def space(self) -> JetSpace:
        return jet_space(self.dim, self.order, self.outer_order)

    @property
    def value(self) -> float:
        return float(self.coeffs[0])

    def coeff(self, alpha) -> float:
        """Taylor coefficient at multi-index alpha (derivative / alpha!).

        On a doubly graded jet, alpha is an (inner, outer) pair of
        multi-indices.
        """
        if self.outer_order:
            return float(self.coeffs[self.space.index_of(alpha)])
        alpha = tuple(int(x) for x in alpha)
        if len(alpha) != self.dim or any(a < 0 for a in alpha):
            raise ArgumentError(f"bad multi-index {alpha} for dim {self.dim}")
        if sum(alpha) > self.order:
            raise TruncationError(f"|{alpha}| exceeds jet order {self.order}")
        return float(self.coeffs[self.space.index_of(alpha)])

    def derivative(self, alpha) -> float:
        """The coordinate derivative ∂^alpha at the base point."""
        alpha = tuple(int(x) for x in alpha)
        c = self.coeff(alpha)
        for a in alpha:
            c *= factorial(a)
        return c

    def as_dict(self) -> dict:
        space = self.space
        if self.outer_order:
            return {key: float(self.coeffs[i]) for key, i in space.index.items()}
        return {tuple(row): float(self.coeffs[i])
                for i, row in enumerate(space.exps.tolist())}

    # -- arithmetic --------------------------------------------------------

    def _check_compatible(self, other: "Jet"):
        if (self.dim, self.order, self.outer_order) != (other.dim, other.order,
                                                        other.outer_order):
            raise ArgumentError("jets must share dim and orders")

    def _wrap(self, coeffs) -> "Jet":
        return Jet(self.dim, self.order, coeffs, self.outer_order)

    def __add__(self, other):
        if isinstance(other, Jet):
            self._check_compatible(other)
            return self._wrap(self.coeffs + other.coeffs)
        out = self.coeffs.copy()
        out[0] += float(other)
        return self._wrap(out)

    __radd__ = __add__

    def __neg__(self):
        return self._wrap(-self.coeffs)

    def __sub__(self, other):
        return self + (-other if isinstance(other, Jet) else -float(other))

    def __rsub__(self, other):
        return (-self) + float(other)

    def __mul__(self, other):
        if isinstance(other, Jet):
            self._check_compatible(other)
            return self._wrap(jmul(self.space, self.coeffs, other.coeffs))
        return self._wrap(self.coeffs * float(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            self._check_compatible(other)
            return self._wrap(jdiv(self.space, self.coeffs, other.coeffs))
        return self._wrap(self.coeffs / float(other))

    def __rtruediv__(self, other):
        return self._wrap(float(other) * jrecip(self.space, self.coeffs))

    def exp(self):
        return self._wrap(jcompose(self.space, self.coeffs, "exp"))

    def log(self):
        return self._wrap(jcompose(self.space, self.coeffs, "log"))

    def sqrt(self):
        return self._wrap(jcompose(self.space, self.coeffs, "sqrt"))

    def sin(self):
        return self._wrap(jcompose(self.space, self.coeffs, "sin"))

    def cos(self):
        return self._wrap(jcompose(self.space, self.coeffs, "cos"))

    def __pow__(self, r):
        return self._wrap(jcompose(self.space, self.coeffs, "pow", power=r))


def variable(dim: int, order: int, index: int, base_value: float) -> Jet:
    """Jet of the coordinate function x^index about the base point."""
    if not 0 <= order <= MAX_ORDER:
        raise ArgumentError(f"order must be in [0, {MAX_ORDER}], got {order}")
    if not 0 <= index < dim:
        raise ArgumentError(f"coordinate index {index} out of range for dim {dim}")
    return Jet(dim, order, jet_space(dim, order).coordinate(index, float(base_value)))


def constant(dim: int, order: int, value: float) -> Jet:
    return Jet(dim, order, jet_space(dim, order).constant(float(value)))


def combine(a: Jet, b: Jet, op: str) -> Jet:
    """Arithmetic on two jets sharing dim and order: add, sub, mul or div."""
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    raise ArgumentError(f"unknown op {op!r}")


def elementary(a: Jet, fn: str, power=None) -> Jet:
    """Compose a jet with exp, log, sqrt, sin, cos or pow(power)."""
    if fn == "pow":
        return a ** power
    if fn not in ("exp", "log", "sqrt", "sin", "cos"):
        raise ArgumentError(f"unknown elementary function {fn!r}")
    return getattr(a, fn)()


def derivative(a: Jet, alpha) -> float:
    return a.derivative(alpha)
