"""Analytic coordinate charts that emit metric-component jets.

A chart is a single coordinate patch with a closed-form metric.  Its
generator is written against ``Jet`` coordinates, so the same code emits
plain jets of any order up to 4 and doubly graded jets for base-point
differentiation.  All derivatives downstream of a chart are therefore exact
truncated-Taylor data, never finite differences.

Charts are immutable; evaluation is pure and safe to run concurrently over
points.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ._tables import multi_indices
from .errors import ArgumentError, DomainError
from .jets import Jet, jet_matrix_inverse, jet_space

MAX_PERTURBATION_COEFF = 0.1


def coordinate_jets(dim: int, point, order: int = 4, outer_order: int = 0):
    """The tuple of coordinate-function jets about ``point``."""
    space = jet_space(dim, order, outer_order)
    seeds = space.seed_point(np.asarray(point, dtype=np.float64))
    return tuple(Jet(dim, order, seeds[i], outer_order) for i in range(dim))


def _const_like(x: Jet, value: float) -> Jet:
    return Jet(x.dim, x.order, x.space.constant(float(value)), x.outer_order)


@dataclass(frozen=True)
class MetricChart:
    """One coordinate patch: dimension, domain test, metric generator, label.

    ``generator(xs)`` maps a tuple of coordinate jets to a (dim, dim) nested
    list of jets (or plain floats for constant entries), symmetric by
    construction.
    """

    dim: int
    generator: Callable = field(repr=False)
    label: str = "chart"
    domain: Callable = field(repr=False, default=None)

    def contains(self, point) -> bool:
        point = np.asarray(point, dtype=np.float64)
        if point.shape != (self.dim,):
            return False
        return bool(self.domain(point)) if self.domain is not None else True

    def metric_jets(self, point, order: int = 4, outer_order: int = 0) -> np.ndarray:
        """Raw coefficient array g_ab, shape (dim, dim, ncoeff)."""
        point = np.asarray(point, dtype=np.float64)
        if not self.contains(point):
            raise DomainError(f"point {point.tolist()} outside domain of {self.label}")
        xs = coordinate_jets(self.dim, point, order, outer_order)
        rows = self.generator(xs)
        space = jet_space(self.dim, order, outer_order)
        out = np.empty((self.dim, self.dim, space.ncoeff))
        for a in range(self.dim):
            for b in range(self.dim):
                entry = rows[a][b]
                out[a, b] = entry.coeffs if isinstance(entry, Jet) else \
                    space.constant(float(entry))
        sym_gap = np.max(np.abs(out - out.transpose(1, 0, 2)))
        if sym_gap > 1e-12 * (1.0 + np.max(np.abs(out))):
            raise ArgumentError(f"generator of {self.label} is not symmetric")
        out = 0.5 * (out + out.transpose(1, 0, 2))
        eigs = np.linalg.eigvalsh(out[:, :, 0])
        if eigs[0] <= 0:
            raise DomainError(
                f"metric of {self.label} not positive definite at {point.tolist()}")
        return out

    def metric_matrix(self, point) -> np.ndarray:
        return self.metric_jets(point, order=0)[:, :, 0]


@dataclass(frozen=True)
class ScalarField:
    """Scalar generator over a chart's coordinates, with a conformal weight.

    Weight 0 is an ordinary function (e.g. a rescaling log-factor); weight 1
    is a scale in the trivialization of densities by the chart's metric.
    """

    dim: int
    generator: Callable = field(repr=False)
    weight: int = 0
    label: str = "scalar"

    def jet(self, point, order: int = 4, outer_order: int = 0) -> np.ndarray:
        xs = coordinate_jets(self.dim, point, order, outer_order)
        out = self.generator(xs)
        if isinstance(out, Jet):
            return out.coeffs
        return jet_space(self.dim, order, outer_order).constant(float(out))

    def value(self, point) -> float:
        return float(self.jet(point, order=0)[0])


def constant_scalar(dim: int, value: float, weight: int = 0) -> ScalarField:
    return ScalarField(dim, lambda xs: float(value), weight, f"const({value})")


def scalar_from_coeffs(dim: int, coeff_table: dict, weight: int = 0,
                       label: str = "poly") -> ScalarField:
    """Polynomial scalar field sum c_alpha x^alpha from a multi-index table."""
    table = {tuple(int(a) for a in k): float(v) for k, v in coeff_table.items()}
    for k in table:
        if len(k) != dim or min(k) < 0:
            raise ArgumentError(f"bad multi-index {k} for dim {dim}")

    def gen(xs):
        acc = _const_like(xs[0], 0.0)
        for alpha, c in table.items():
            term = _const_like(xs[0], c)
            for i, e in enumerate(alpha):
                for _ in range(e):
                    term = term * xs[i]
            acc = acc + term
        return acc

    return ScalarField(dim, gen, weight, label)


# ---------------------------------------------------------------------------
# builtin families
# ---------------------------------------------------------------------------

def _kron(xs, factor):
    d = len(xs)
    return [[factor if a == b else 0.0 for b in range(d)] for a in range(d)]


def euclidean(dim: int) -> MetricChart:
    """Flat metric, identity components."""
    if dim < 1:
        raise ArgumentError("dimension must be positive")
    return MetricChart(dim, lambda xs: _kron(xs, 1.0), f"euclidean({dim})")


def round_sphere_stereo(dim: int, radius: float = 1.0) -> MetricChart:
    """Round sphere in one stereographic chart: g = 4r^2 (1+|x|^2)^{-2} delta."""
    if dim < 1:
        raise ArgumentError("dimension must be positive")
    if radius <= 0:
        raise ArgumentError(f"radius must be positive, got {radius}")

    def gen(xs):
        s = _const_like(xs[0], 1.0)
        for x in xs:
            s = s + x * x
        factor = (4.0 * radius * radius) / (s * s)
        return _kron(xs, factor)

    return MetricChart(dim, gen, f"round_sphere_stereo({dim},r={radius})")


def poincare_ball(dim: int) -> MetricChart:
    """Hyperbolic ball: g = 4 (1-|x|^2)^{-2} delta on |x| < 1."""
    if dim < 1:
        raise ArgumentError("dimension must be positive")

    def gen(xs):
        s = _const_like(xs[0], 1.0)
        for x in xs:
            s = s - x * x
        factor = 4.0 / (s * s)
        return _kron(xs, factor)

    return MetricChart(dim, gen, f"poincare_ball({dim})",
                       domain=lambda p: float(np.dot(p, p)) < 1.0)


def product_spheres(d1: int, r1: float, d2: int, r2: float) -> MetricChart:
    """Block-diagonal product of two round spheres in stereographic factor charts."""
    if d1 < 1 or d2 < 1:
        raise ArgumentError("factor dimensions must be positive")
    if r1 <= 0 or r2 <= 0:
        raise ArgumentError("radii must be positive")

    def gen(xs):
        d = d1 + d2
        s1 = _const_like(xs[0], 1.0)
        for x in xs[:d1]:
            s1 = s1 + x * x
        s2 = _const_like(xs[0], 1.0)
        for x in xs[d1:]:
            s2 = s2 + x * x
        f1 = (4.0 * r1 * r1) / (s1 * s1)
        f2 = (4.0 * r2 * r2) / (s2 * s2)
        rows = [[0.0] * d for _ in range(d)]
        for a in range(d1):
            rows[a][a] = f1
        for a in range(d1, d):
            rows[a][a] = f2
        return rows

    return MetricChart(d1 + d2, gen, f"product_spheres({d1},{r1},{d2},{r2})")


def polynomial_perturbation(dim: int, coeff_table: dict) -> MetricChart:
    """g = delta + h with h a small symmetric polynomial of degree <= 4.

    ``coeff_table`` maps (a, b, alpha) -> coefficient; entries are mirrored
    onto (b, a, alpha).  Coefficients above 0.1 in magnitude are rejected so
    positive definiteness on the unit ball is plausible (and still checked at
    every evaluation).
    """
    if dim < 1:
        raise ArgumentError("dimension must be positive")
    table = {}
    for (a, b, alpha), c in coeff_table.items():
        alpha = tuple(int(e) for e in alpha)
        if not (0 <= a < dim and 0 <= b < dim) or len(alpha) != dim:
            raise ArgumentError(f"bad perturbation key {(a, b, alpha)}")
        if sum(alpha) > 4:
            raise ArgumentError(f"perturbation degree {sum(alpha)} exceeds 4")
        if abs(c) > MAX_PERTURBATION_COEFF:
            raise ArgumentError(
                f"perturbation coefficient {c} exceeds {MAX_PERTURBATION_COEFF}")
        table[(min(a, b), max(a, b), alpha)] = float(c)

    def gen(xs):
        rows = [[_const_like(xs[0], 1.0 if a == b else 0.0) for b in range(dim)]
                for a in range(dim)]
        for (a, b, alpha), c in table.items():
            term = _const_like(xs[0], c)
            for i, e in enumerate(alpha):
                for _ in range(e):
                    term = term * xs[i]
            rows[a][b] = rows[a][b] + term
            if a != b:
                rows[b][a] = rows[b][a] + term
        return rows

    return MetricChart(dim, gen, f"polynomial_perturbation({dim})")


def random_polynomial_perturbation(dim: int, seed: int, magnitude: float = 0.03,
                                   max_degree: int = 4) -> MetricChart:
    """Reproducible generic non-Einstein chart for identity tests."""
    rng = np.random.default_rng(seed)
    table = {}
    for a in range(dim):
        for b in range(a, dim):
            for alpha in multi_indices(dim, max_degree).tolist():
                if 0 < sum(alpha) and rng.random() < 0.35:
                    table[(a, b, tuple(alpha))] = magnitude * rng.uniform(-1, 1)
    return polynomial_perturbation(dim, table)


def fg_hyperbolic_normal_form(boundary_chart: MetricChart,
                              schouten_field: Callable) -> MetricChart:
    """Poincare-Einstein normal-form metric over a boundary chart.

    Coordinates are (y, s) with s > 0 last.  The metric is
    s^{-2}(ds^2 + g_s) with
    g_s = g^B - s^2 P^B + (s^4/4) g_B^{kl} P^B_{.k} P^B_{l.},
    where g^B is the boundary metric and P^B = ``schouten_field(ys)`` is a
    user-supplied symmetric 2-tensor generator over the boundary coordinates
    (in d = 3 it is only constrained by trace and divergence, so it is an
    input rather than something derived here).
    """
    m = boundary_chart.dim
    dim = m + 1

    def gen(xs):
        ys, s = xs[:m], xs[m]
        gb = boundary_chart.generator(ys)
        pb = schouten_field(ys)
        one = _const_like(s, 1.0)
        gb = [[gb[i][j] if isinstance(gb[i][j], Jet) else gb[i][j] * one
               for j in range(m)] for i in range(m)]
        pb = [[pb[i][j] if isinstance(pb[i][j], Jet) else pb[i][j] * one
               for j in range(m)] for i in range(m)]
        space = s.space
        gmat = np.stack([np.stack([gb[i][j].coeffs for j in range(m)]) for i in range(m)])
        ginv = jet_matrix_inverse(space, gmat)
        s2 = s * s
        s4 = s2 * s2
        rows = [[None] * dim for _ in range(dim)]
        for i in range(m):
            for j in range(m):
                quad = _const_like(s, 0.0)
                for k in range(m):
                    for l in range(m):
                        quad = quad + Jet(s.dim, s.order, ginv[k, l], s.outer_order) \
                            * pb[i][k] * pb[l][j]
                rows[i][j] = (gb[i][j] - s2 * pb[i][j] + 0.25 * s4 * quad) / s2
        for i in range(m):
            rows[i][m] = 0.0
            rows[m][i] = 0.0
        rows[m][m] = one / s2
        return rows

    def domain(p):
        return p[m] > 0.0 and boundary_chart.contains(p[:m])

    return MetricChart(dim, gen, f"fg_normal_form({boundary_chart.label})", domain)


def round_boundary_schouten(radius: float = 1.0) -> Callable:
    """Intrinsic Schouten generator of a round stereographic boundary: P = g/(2 r^2)."""

    def fieldgen(ys):
        m = len(ys)
        chart = round_sphere_stereo(m, radius)
        g = chart.generator(ys)
        return [[g[i][j] * (0.5 / radius ** 2) if isinstance(g[i][j], Jet)
                 else g[i][j] * (0.5 / radius ** 2) for j in range(m)] for i in range(m)]

    return fieldgen


def flat_boundary_schouten() -> Callable:
    def fieldgen(ys):
        m = len(ys)
        return [[0.0] * m for _ in range(m)]

    return fieldgen


# ---------------------------------------------------------------------------
# combinators
# ---------------------------------------------------------------------------

def conformal_rescale(chart: MetricChart, omega: ScalarField) -> MetricChart:
    """New chart emitting e^{2 omega} g_ab by exact jet composition."""
    if omega.weight != 0:
        raise ArgumentError("rescaling exponent must have weight 0")
    if omega.dim != chart.dim:
        raise ArgumentError("rescaling field dimension mismatch")

    def gen(xs):
        rows = chart.generator(xs)
        w = omega.generator(xs)
        factor = (2.0 * w).exp() if isinstance(w, Jet) else float(np.exp(2.0 * w))
        d = chart.dim
        out = [[0.0] * d for _ in range(d)]
        for a in range(d):
            for b in range(d):
                entry = rows[a][b]
                if isinstance(entry, float) and entry == 0.0:
                    continue
                out[a][b] = factor * entry
        return out

    return MetricChart(chart.dim, gen, f"rescale({chart.label},{omega.label})",
                       chart.domain)


def inverse_metric(chart: MetricChart, point):
    """Pointwise inverse metric as a rank-2 upper TensorValue (weight 0)."""
    from .tensors import TensorValue

    g0 = chart.metric_matrix(point)
    return TensorValue(chart.dim, ("u", "u"), 0, np.linalg.inv(g0))


@dataclass(frozen=True)
class Embedding:
    """Analytic map u -> X(u) into an ambient chart, with closed-form Jacobian.

    ``mapping(us)`` returns ambient coordinate jets; ``jacobian(us)`` returns
    the (ambient_dim, intrinsic_dim) nested list dX^a/du^i as jets.  Supplying
    the Jacobian in closed form keeps pullback metric jets at full order.
    """

    intrinsic_dim: int
    ambient_dim: int
    mapping: Callable = field(repr=False)
    jacobian: Callable = field(repr=False)
    label: str = "embedding"


def stereographic_sphere_embedding(ambient_dim: int, radii=None) -> Embedding:
    """u in R^{d-1} -> axis-scaled unit sphere point in R^d.

    With radii = (r_1, ..., r_d) the image is the ellipsoid
    sum (X^a / r_a)^2 = 1; radii None means the unit sphere.
    """
    m = ambient_dim - 1
    if m < 1:
        raise ArgumentError("ambient dimension must be at least 2")
    radii = np.ones(ambient_dim) if radii is None else np.asarray(radii, dtype=np.float64)
    if radii.shape != (ambient_dim,) or np.any(radii <= 0):
        raise ArgumentError("need one positive radius per ambient axis")

    def mapping(us):
        s = _const_like(us[0], 1.0)
        for u in us:
            s = s + u * u
        f = 1.0 / s
        xs = [radii[i] * (2.0 * us[i] * f) for i in range(m)]
        xs.append(radii[m] * (1.0 - 2.0 * f))
        return xs

    def jacobian(us):
        s = _const_like(us[0], 1.0)
        for u in us:
            s = s + u * u
        f = 1.0 / s
        f2 = f * f
        rows = []
        for a in range(m):
            rows.append([radii[a] * (2.0 * (1.0 if a == i else 0.0) * f
                                     - 4.0 * us[a] * us[i] * f2) for i in range(m)])
        rows.append([radii[m] * (4.0 * us[i] * f2) for i in range(m)])
        return rows

    tag = "sphere" if np.all(radii == radii[0]) else "ellipsoid"
    return Embedding(m, ambient_dim, mapping, jacobian, f"{tag}_stereo({ambient_dim})")


def pullback_chart(ambient_chart: MetricChart, embedding: Embedding) -> MetricChart:
    """Induced metric g_ij(u) = dX^a/du^i dX^b/du^j g_ab(X(u))."""
    if embedding.ambient_dim != ambient_chart.dim:
        raise ArgumentError("embedding/chart ambient dimension mismatch")
    m = embedding.intrinsic_dim

    def gen(us):
        xs = embedding.mapping(us)
        jac = embedding.jacobian(us)
        gamb = ambient_chart.generator(xs)
        rows = [[_const_like(us[0], 0.0) for _ in range(m)] for _ in range(m)]
        for i in range(m):
            for j in range(i, m):
                acc = _const_like(us[0], 0.0)
                for a in range(embedding.ambient_dim):
                    for b in range(embedding.ambient_dim):
                        gab = gamb[a][b]
                        if isinstance(gab, float) and gab == 0.0:
                            continue
                        acc = acc + jac[a][i] * jac[b][j] * gab
                rows[i][j] = acc
                rows[j][i] = acc
        return rows

    return MetricChart(m, gen, f"pullback({ambient_chart.label},{embedding.label})")
