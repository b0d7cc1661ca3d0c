"""Almost-Einstein scales: residual functionals, classification, quadrics.

A scale sigma is almost Einstein when the trace-free part of
grad grad sigma + sigma P vanishes; equivalently its scale tractor
I = (sigma, grad sigma, (Lap - J) sigma / d) is parallel.  Off the zero
locus of sigma the rescaled metric sigma^{-2} g is then Einstein with
Ric = -(d-1) |I|^2 g, and the sign of |I|^2 sorts the structure into the
scalar-positive / scalar-flat / scalar-negative trichotomy, with the zero
locus empty, isolated points, or a hypersurface respectively.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .charts import MetricChart, ScalarField, conformal_rescale, euclidean
from .curvature import covariant_derivative, riemann
from .errors import (ArgumentError, DimensionError, NotAlmostEinsteinError,
                     ScaleSingularityError)
from .jets import Jet
from .tensors import TensorValue
from .tractor import (contract_tractor_slots, fD, splitting, splitting_field,
                      tractor_connection, tractor_curvature_divergence,
                      tractor_metric, w_field, w_tractor)

PARALLEL_TOL = 1e-8
FLAT_TOL = 1e-12
SIGMA_GUARD = 1e-3


@dataclass
class AEStructure:
    """A chart together with a candidate weight-1 scale and sample points.

    ``quadric`` keeps the (a, b, c) coefficients when the scale comes from
    the flat quadric family, which is what lets classification also report
    the explicit singularity locus.
    """

    chart: MetricChart
    sigma: ScalarField
    samples: np.ndarray
    quadric: tuple | None = None
    label: str = "ae structure"

    def __post_init__(self):
        if self.sigma.weight != 1:
            raise ArgumentError("an almost-Einstein scale must have weight 1")
        pts = np.atleast_2d(np.asarray(self.samples, dtype=np.float64))
        if pts.shape[1] != self.chart.dim:
            raise ArgumentError("sample points do not match the chart dimension")
        self.samples = pts

    @cached_property
    def i_field(self):
        return splitting_field(self.chart, self.sigma)

    @cached_property
    def i_norm_sq(self) -> float:
        i = splitting(self.chart, self.samples[0], self.sigma)
        return tractor_metric(i, i)


@dataclass(frozen=True)
class AEClassification:
    tag: str
    i_norm_sq: float
    max_parallel_residual: float
    locus: dict | None


def ae_structure(chart: MetricChart, sigma: ScalarField, samples=None,
                 n_samples: int = 8, radius: float = 0.3,
                 seed: int = 0, label: str | None = None) -> AEStructure:
    """Wrap a chart and scale, drawing default samples near the origin."""
    if samples is None:
        rng = np.random.default_rng(seed)
        samples = rng.uniform(-radius, radius, size=(n_samples, chart.dim))
    return AEStructure(chart, sigma, samples,
                       label=label or f"{sigma.label} on {chart.label}")


def quadric_ae(a: float, b, c: float, seed: int = 0) -> AEStructure:
    """Flat-space family sigma = a + b.x + c |x|^2; every member is AE.

    The squared tractor length is |b|^2 - 4ac and the singularity locus is
    the quadric sigma = 0: a sphere, a single point, a hyperplane (c = 0),
    or empty.
    """
    b = np.asarray(b, dtype=np.float64)
    if b.ndim != 1 or b.size < 3:
        raise ArgumentError("quadric coefficient b must be a vector, d >= 3")
    if a == 0.0 and c == 0.0 and not b.any():
        raise ArgumentError("quadric scale parameters must not all vanish")
    d = b.size

    def gen(xs):
        e = float(a)
        for i in range(d):
            e = e + b[i] * xs[i] + c * xs[i] * xs[i]
        return e

    sigma = ScalarField(d, gen, weight=1, label=f"quadric({a},{c})")
    ae = ae_structure(euclidean(d), sigma, radius=0.6, seed=seed,
                      label=f"quadric a={a} c={c}")
    ae.quadric = (float(a), b.copy(), float(c))
    return ae


def _require_scale(s):
    if s.weight != 1:
        raise ArgumentError("an almost-Einstein scale must have weight 1")


def ae_residual(chart: MetricChart, s: ScalarField, point) -> TensorValue:
    """Trace-free part of grad grad s + s P, the almost-Einstein equation."""
    _require_scale(s)
    pk = riemann(chart, point)
    d = chart.dim
    dd = covariant_derivative(s, chart, point, times=2).components
    m = dd + s.value(point) * pk.schouten.components
    g = pk.g.components
    ginv = np.linalg.inv(g)
    tf = m - (float(np.einsum("ab,ab->", ginv, m)) / d) * g
    return TensorValue(d, ("l", "l"), 1, tf)


def asc_scalar(chart: MetricChart, s: ScalarField, point) -> float:
    """The almost-scalar-constant functional (2/d) s (J - Lap) s - |ds|^2."""
    _require_scale(s)
    pk = riemann(chart, point)
    d = chart.dim
    val = s.value(point)
    grad = covariant_derivative(s, chart, point).components
    dd = covariant_derivative(s, chart, point, times=2).components
    ginv = np.linalg.inv(pk.g.components)
    lap = -float(np.einsum("ab,ab->", ginv, dd))
    return (2.0 / d) * val * (float(pk.jcal.components) * val - lap) \
        - float(grad @ ginv @ grad)


def parallel_residual(ae: AEStructure, point) -> float:
    """Sup-norm of the tractor derivative of the scale tractor at a point."""
    return tractor_connection(ae.i_field, ae.chart, point).norm_inf


def classify(ae: AEStructure, parallel_tol: float = PARALLEL_TOL,
             flat_tol: float = FLAT_TOL) -> AEClassification:
    """Sort a verified AE structure by the sign of its tractor length.

    Negative squared length means the rescaled metric has positive scalar
    curvature and an empty singularity set; zero means scalar-flat with at
    most isolated singular points; positive means scalar-negative with a
    hypersurface singularity set.
    """
    res = max(parallel_residual(ae, p) for p in ae.samples)
    if res > parallel_tol:
        raise NotAlmostEinsteinError(
            f"parallel residual {res:.3e} exceeds {parallel_tol:.1e}; "
            f"{ae.label} is not almost Einstein on the sample set")
    i2 = ae.i_norm_sq
    if abs(i2) <= flat_tol:
        tag = "scalar_flat"
    elif i2 < 0.0:
        tag = "scalar_positive"
    else:
        tag = "scalar_negative"
    locus = _quadric_locus(*ae.quadric, flat_tol) if ae.quadric else None
    return AEClassification(tag, i2, res, locus)


def _quadric_locus(a: float, b, c: float, flat_tol: float) -> dict:
    """Explicit zero set of a + b.x + c |x|^2 in flat coordinates."""
    b = np.asarray(b, dtype=np.float64)
    i2 = float(b @ b - 4.0 * a * c)
    if abs(c) <= flat_tol:
        if not b.any():
            return {"kind": "empty"}
        scale = float(np.linalg.norm(b))
        return {"kind": "hyperplane", "normal": b / scale,
                "offset": -a / scale}
    center = -b / (2.0 * c)
    if i2 > flat_tol:
        return {"kind": "sphere", "center": center,
                "radius": float(np.sqrt(i2) / (2.0 * abs(c)))}
    if i2 < -flat_tol:
        return {"kind": "empty"}
    return {"kind": "point", "center": center}


def einstein_residual(ae: AEStructure, point) -> float:
    """Deviation of sigma^{-2} g from Ric = -(d-1) |I|^2 g off the zero set."""
    val = ae.sigma.value(point)
    if abs(val) < SIGMA_GUARD:
        raise ScaleSingularityError(
            f"|sigma| = {abs(val):.2e} at the requested point; the Einstein "
            f"metric is only defined away from the scale singularity set")
    d = ae.chart.dim
    sgen = ae.sigma.generator

    def gen(xs):
        s = sgen(xs)
        if isinstance(s, Jet):
            return (s * s).log() * (-0.5)
        return -0.5 * float(np.log(float(s) * float(s)))

    hat = conformal_rescale(ae.chart, ScalarField(d, gen, 0, "-log|sigma|"))
    i = splitting(ae.chart, point, ae.sigma)
    i2 = tractor_metric(i, i)
    pk = riemann(hat, point)
    resid = pk.ricci.components + (d - 1) * i2 * pk.g.components
    return float(np.max(np.abs(resid)))


def aesum_residuals(ae: AEStructure, point) -> dict:
    """Pointwise norms of the four curvature contractions that vanish on AE.

    r1: sigma A_cab + n^d C_abcd,  r2: n^c A_cab,
    r3: sigma B_ac + (d-4) n^e A_cae,  r4: n^a B_ab,
    with n the gradient of sigma.  All four vanish on the whole chart,
    including on the singularity set.
    """
    pk = riemann(ae.chart, point)
    d = ae.chart.dim
    val = ae.sigma.value(point)
    grad = covariant_derivative(ae.sigma, ae.chart, point).components
    nup = np.linalg.inv(pk.g.components) @ grad
    cot = pk.cotton.components
    r1 = val * cot.transpose(1, 2, 0) \
        + np.einsum("abcd,d->abc", pk.weyl.components, nup)
    r2 = np.einsum("cab,c->ab", cot, nup)
    r3 = val * pk.bach.components \
        + (d - 4.0) * np.einsum("cae,e->ca", cot, nup).T
    r4 = nup @ pk.bach.components
    return {key: float(np.max(np.abs(arr)))
            for key, arr in (("r1", r1), ("r2", r2), ("r3", r3), ("r4", r4))}


def ext_residual(ae: AEStructure, point) -> float:
    """Residual of the parallel-tractor hooks into W and its derivative.

    Checks I contracted into the adjusted derivative of W together with the
    direct hooks into the first and last W slots.  In dimension 3 the rank
    reduces W to lower-order data and the Weyl norm is returned; dimension 4
    is refused because W vanishes there and the content moves to the
    Yang-Mills residual.
    """
    d = ae.chart.dim
    if d == 4:
        raise DimensionError(
            "W vanishes identically at d = 4; check yang_mills_residual")
    if d == 3:
        return float(riemann(ae.chart, point).weyl.norm_inf())
    der = fD(w_field(ae.chart), ae.chart, point)
    i = splitting(ae.chart, point, ae.sigma)
    w = w_tractor(ae.chart, point)
    return max(contract_tractor_slots(i, der, slot_s=0).norm_inf,
               contract_tractor_slots(i, w, slot_s=0).norm_inf,
               contract_tractor_slots(i, w, slot_s=3).norm_inf)


def yang_mills_residual(chart: MetricChart, point) -> float:
    """Sup-norm of the divergence of the tractor curvature."""
    return tractor_curvature_divergence(chart, point).norm_inf
