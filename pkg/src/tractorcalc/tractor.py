"""Tractor bundle calculus in a chosen metric trivialization.

A tractor slot is stored projector-expanded as one packed axis of size
d + 2: entry 0 is the coefficient of the weight -1 injector (the sigma
word), entries 1..d are the coefficients of the form injectors (carrying a
lower tensor index), and entry d + 1 is the coefficient of the weight +1
injector (the rho word).  Raising or lowering a tractor slot leaves these
coefficients alone; contractions insert the packed pairing matrix instead,
so every stored value is variance-free.

Conventions, with P the Schouten tensor of the trivializing metric:

* covariant derivative of a packed triple (sigma, mu_b, rho) in direction a:
  (grad_a sigma - mu_a, grad_a mu_b + g_ab rho + P_ab sigma,
  grad_a rho - P_a^b mu_b);
* bundle metric of two triples: g^{ab} mu_a nu_b + sigma rho' + rho sigma',
  signature (d+1, 1);
* scale change by e^{2 omega} g with one-form Upsilon = d omega:
  (sigma, mu, rho) -> (sigma, mu + sigma Upsilon,
  rho - Upsilon^b mu_b - sigma |Upsilon|^2 / 2), each row re-trivialized by
  its own density weight.

Internally the packed coefficients of a weight-w tractor are densities of
weight w+1, w+1 and w-1; ``TractorValue.weight`` records w and the
transformation matrix applies the internal shifts.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .charts import MetricChart, ScalarField, coordinate_jets
from .curvature import GeometryJets
from .errors import (ArgumentError, DimensionError, ScaleMismatchError,
                     TruncationError)
from .jets import Jet, jet_space, jmul
from .tensors import TensorValue


# ---------------------------------------------------------------------------
# packed values
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TractorValue:
    """Pointwise tractor-valued tensor in packed projector components.

    ``components`` has one size-d axis per tensor slot (leading, variance
    recorded in ``tensor_slots``) followed by one size-(d+2) packed axis per
    tractor slot.  ``metric`` holds the trivializing metric at ``point`` so
    the value is self-contained for pairing and scale changes.
    """

    dim: int
    point: np.ndarray
    scale: str
    metric: np.ndarray
    weight: int
    tensor_slots: tuple
    n_tractor: int
    components: np.ndarray

    def __post_init__(self):
        d = self.dim
        pt = np.asarray(self.point, dtype=np.float64).copy()
        gm = np.asarray(self.metric, dtype=np.float64).copy()
        comp = np.asarray(self.components, dtype=np.float64).copy()
        if pt.shape != (d,):
            raise ArgumentError(f"point shape {pt.shape} does not match dim {d}")
        if gm.shape != (d, d):
            raise ArgumentError("metric must be a d x d matrix")
        if self.n_tractor < 1:
            raise ArgumentError("a tractor value needs at least one tractor slot")
        if any(s not in ("u", "l") for s in self.tensor_slots):
            raise ArgumentError(f"bad tensor slot markers {self.tensor_slots}")
        want = (d,) * len(self.tensor_slots) + (d + 2,) * self.n_tractor
        if comp.shape != want:
            raise ArgumentError(f"component shape {comp.shape}, expected {want}")
        for arr in (pt, gm, comp):
            arr.flags.writeable = False
        object.__setattr__(self, "point", pt)
        object.__setattr__(self, "metric", gm)
        object.__setattr__(self, "components", comp)
        object.__setattr__(self, "tensor_slots", tuple(self.tensor_slots))

    @property
    def sigma(self) -> float:
        self._single()
        return float(self.components[0])

    @property
    def mu(self) -> np.ndarray:
        self._single()
        return np.array(self.components[1:self.dim + 1])

    @property
    def rho(self) -> float:
        self._single()
        return float(self.components[self.dim + 1])

    def _single(self):
        if self.tensor_slots or self.n_tractor != 1:
            raise ArgumentError("sigma/mu/rho need a single bare tractor slot")

    @property
    def norm_inf(self) -> float:
        return float(np.max(np.abs(self.components)))

    def replace_components(self, comp) -> "TractorValue":
        return TractorValue(self.dim, self.point, self.scale, self.metric,
                            self.weight, self.tensor_slots, self.n_tractor,
                            comp)


def pairing_matrix(metric: np.ndarray) -> np.ndarray:
    """Packed matrix that contracts an upper against a lower tractor slot."""
    g = np.asarray(metric, dtype=np.float64)
    d = g.shape[0]
    out = np.zeros((d + 2, d + 2))
    out[0, d + 1] = out[d + 1, 0] = 1.0
    out[1:d + 1, 1:d + 1] = np.linalg.inv(g)
    return out


def _same_frame(t1: TractorValue, t2: TractorValue):
    if t1.scale != t2.scale:
        raise ScaleMismatchError(
            f"scales {t1.scale!r} and {t2.scale!r} trivialize differently")
    if not np.allclose(t1.point, t2.point):
        raise ScaleMismatchError("tractor values live at different points")
    if not np.allclose(t1.metric, t2.metric):
        raise ScaleMismatchError("tractor values carry different metrics")


def tractor_metric(t1: TractorValue, t2: TractorValue) -> float:
    """Bundle metric of two rank-1 tractors in the shared trivialization."""
    _same_frame(t1, t2)
    if t1.tensor_slots or t2.tensor_slots or (t1.n_tractor, t2.n_tractor) != (1, 1):
        raise ArgumentError("bundle metric pairs two bare rank-1 tractors")
    jm = pairing_matrix(t1.metric)
    return float(t1.components @ jm @ t2.components)


def contract_tractor_slots(t: TractorValue, s: TractorValue,
                           slot_t: int = 0, slot_s: int = 0):
    """Pair one tractor slot of ``t`` against one of ``s``.

    Remaining axes keep the tensor-slots-first layout, with the tensor slots
    of ``t`` preceding those of ``s``.  A fully scalar result is returned as
    a float.
    """
    _same_frame(t, s)
    jm = pairing_matrix(t.metric)
    n_tt, n_ts = len(t.tensor_slots), len(s.tensor_slots)
    if not 0 <= slot_t < t.n_tractor or not 0 <= slot_s < s.n_tractor:
        raise ArgumentError("tractor slot index out of range")
    a = np.tensordot(t.components, jm, axes=([n_tt + slot_t], [0]))
    out = np.tensordot(a, s.components, axes=([a.ndim - 1], [n_ts + slot_s]))
    t_rem = t.n_tractor - 1
    out = np.moveaxis(out, range(n_tt + t_rem, n_tt + t_rem + n_ts),
                      range(n_tt, n_tt + n_ts))
    slots = t.tensor_slots + s.tensor_slots
    n_tr = t.n_tractor + s.n_tractor - 2
    if not slots and n_tr == 0:
        return float(out)
    if n_tr == 0:
        return TensorValue(t.dim, slots, t.weight + s.weight, out)
    return TractorValue(t.dim, t.point, t.scale, t.metric,
                        t.weight + s.weight, slots, n_tr, out)


def transform_tractor(t: TractorValue, upsilon, omega_p: float = 0.0,
                      new_scale: str | None = None) -> TractorValue:
    """Re-express a tractor in the splitting of e^{2 omega} g.

    ``upsilon`` is the differential of omega at the point; ``omega_p`` its
    value there, entering only through the density re-trivialization factors
    (the packed transformation law itself is omega-free).
    """
    if isinstance(upsilon, TensorValue):
        if upsilon.slots != ("l",):
            raise ArgumentError("scale differential must be a one-form")
        ups = np.asarray(upsilon.components, dtype=np.float64)
    else:
        ups = np.asarray(upsilon, dtype=np.float64)
    d = t.dim
    if ups.shape != (d,):
        raise ArgumentError(f"one-form shape {ups.shape} does not match dim {d}")
    ginv = np.linalg.inv(t.metric)
    up = ginv @ ups
    ew, emw = float(np.exp(omega_p)), float(np.exp(-omega_p))
    u = np.zeros((d + 2, d + 2))
    u[0, 0] = ew
    u[1:d + 1, 0] = ew * ups
    u[1:d + 1, 1:d + 1] = ew * np.eye(d)
    u[d + 1, 0] = -0.5 * emw * float(ups @ up)
    u[d + 1, 1:d + 1] = -emw * up
    u[d + 1, d + 1] = emw
    comp = t.components
    nt = len(t.tensor_slots)
    for j in range(t.n_tractor):
        comp = np.moveaxis(np.tensordot(comp, u, axes=([nt + j], [1])),
                           -1, nt + j)
    comp = comp * float(np.exp(t.weight * omega_p))
    label = new_scale if new_scale is not None else f"rescale({t.scale})"
    return TractorValue(d, t.point, label, np.exp(2.0 * omega_p) * t.metric,
                        t.weight, t.tensor_slots, t.n_tractor, comp)


# ---------------------------------------------------------------------------
# fields
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TractorField:
    """Analytic packed-tractor field over chart coordinates.

    The generator maps coordinate jets to a nested structure matching the
    component layout (tensor axes first, packed axes last); entries may be
    jets or plain numbers.
    """

    dim: int
    weight: int
    generator: Callable = field(repr=False)
    tensor_slots: tuple = ()
    n_tractor: int = 1
    label: str = "tractor field"

    def jets(self, point, order: int = 4, outer_order: int = 0) -> np.ndarray:
        xs = coordinate_jets(self.dim, point, order, outer_order)
        rows = self.generator(xs)
        sp = jet_space(self.dim, order, outer_order)
        shape = ((self.dim,) * len(self.tensor_slots)
                 + (self.dim + 2,) * self.n_tractor)
        out = np.empty(shape + (sp.ncoeff,))
        for idx in np.ndindex(*shape):
            entry = rows
            for i in idx:
                entry = entry[i]
            out[idx] = entry.coeffs if isinstance(entry, Jet) else \
                sp.constant(float(entry))
        return out


class ComputedTractorField:
    """Packed-tractor field whose jets come from a curvature pipeline run."""

    def __init__(self, dim, weight, tensor_slots, n_tractor, builder,
                 label="computed tractor field"):
        self.dim = dim
        self.weight = weight
        self.tensor_slots = tuple(tensor_slots)
        self.n_tractor = n_tractor
        self._builder = builder
        self.label = label

    def jets(self, point, order: int = 4, outer_order: int = 0) -> np.ndarray:
        return self._builder(point, order, outer_order)


def splitting_field(chart: MetricChart, sigma: ScalarField) -> ComputedTractorField:
    """The canonical tractor extension of a weight-1 density as a field."""
    if sigma.weight != 1:
        raise ArgumentError("splitting expects a weight-1 density")

    def build(point, order=4, outer_order=0):
        geo = GeometryJets(chart, point, order, outer_order)
        arr = sigma.jet(point, order, outer_order)
        return _dop_jets(geo, arr, 1, (), 0) / chart.dim

    return ComputedTractorField(chart.dim, 0, (), 1, build,
                                label=f"split({sigma.label})")


def w_field(chart: MetricChart) -> ComputedTractorField:
    """The rank-4 curvature tractor as a field of order-2 jets.

    The pipeline runs once in a doubly graded jet space (inner order 4 for
    the metric, outer order 2 for the base point), so two more derivative
    levels are available downstream without deeper metric jets.  Requested
    orders above 2 are zero-padded; consumers may read at most two
    derivative levels.
    """

    def build(point, order=4, outer_order=0):
        if outer_order:
            raise ArgumentError("curvature-tractor field jets are plain")
        big = GeometryJets(chart, point, 4, 2)
        wj = _w_jets(big)
        block = big.space.inner_block(wj, (0,) * chart.dim)
        sp = jet_space(chart.dim, order)
        out = np.zeros(wj.shape[:-1] + (sp.ncoeff,))
        k = min(block.shape[-1], sp.ncoeff)
        out[..., :k] = block[..., :k]
        return out

    return ComputedTractorField(chart.dim, -2, (), 4, build,
                                label=f"w_tractor({chart.label})")


# ---------------------------------------------------------------------------
# jet-level kernels
# ---------------------------------------------------------------------------

def _conn_mats(geo: GeometryJets) -> np.ndarray:
    """Packed connection matrices C[a, i, m]: slot mixing of grad_a."""
    cached = getattr(geo, "_tractor_conn_mats", None)
    if cached is not None:
        return cached
    d, sp = geo.dim, geo.space
    mats = sp.zeros(d, d + 2, d + 2)
    for a in range(d):
        mats[a, 0, 1 + a, 0] = -1.0
    mats[:, 1:d + 1, 0] = geo.schouten
    # the form block carries a lower coordinate index of its own
    mats[:, 1:d + 1, 1:d + 1] = -geo.gamma.transpose(1, 2, 0, 3)
    mats[:, 1:d + 1, d + 1] = geo.g
    mats[:, d + 1, 1:d + 1] = -geo.raise_index(geo.schouten, 1)
    geo._tractor_conn_mats = mats
    return mats


def _tcov(geo: GeometryJets, arr: np.ndarray, tensor_slots,
          n_tractor: int) -> np.ndarray:
    """Coupled covariant derivative of packed jets, new lower slot first."""
    sp, d = geo.space, geo.dim
    nt = len(tensor_slots)
    out = geo.cov_deriv(arr, tensor_slots)
    if n_tractor == 0:
        return out
    mats = _conn_mats(geo)
    for j in range(n_tractor):
        tm = np.moveaxis(arr, nt + j, 0)
        pad = (None,) * (tm.ndim - 2)
        acc = None
        for m in range(d + 2):
            sl = mats[(slice(None), slice(None), m) + pad]
            term = jmul(sp, sl, tm[m][None, None])
            acc = term if acc is None else acc + term
        out += np.moveaxis(acc, 1, 1 + nt + j)
    return out


def _tlap(geo: GeometryJets, arr: np.ndarray, tensor_slots,
          n_tractor: int) -> np.ndarray:
    """Coupled positive-energy Laplacian of packed jets."""
    sp, d = geo.space, geo.dim
    dd = _tcov(geo, _tcov(geo, arr, tensor_slots, n_tractor),
               ("l",) + tuple(tensor_slots), n_tractor)
    acc = None
    for a in range(d):
        for b in range(d):
            term = jmul(sp, geo.ginv[a, b], dd[a, b])
            acc = term if acc is None else acc + term
    return -acc


def _dop_jets(geo: GeometryJets, arr: np.ndarray, weight: int, tensor_slots,
              n_tractor: int) -> np.ndarray:
    """Second-order splitting operator, new packed axis first."""
    d, sp = geo.dim, geo.space
    f = d + 2 * weight - 2
    grad = _tcov(geo, arr, tensor_slots, n_tractor)
    box = (_tlap(geo, arr, tensor_slots, n_tractor)
           - weight * jmul(sp, geo.jcal, arr))
    out = np.empty((d + 2,) + arr.shape)
    out[0] = f * weight * arr
    out[1:d + 1] = f * grad
    out[d + 1] = box
    return out


def _omega_jets(geo: GeometryJets) -> np.ndarray:
    """Curvature of the coupled connection, packed, axes [a, b, C, E]."""
    d, sp = geo.dim, geo.space
    om = sp.zeros(d, d, d + 2, d + 2)
    om[:, :, 1:d + 1, 1:d + 1] = geo.weyl_low
    a_flip = geo.cotton.transpose(1, 2, 0, 3)          # [a, b, e] = A_eab
    om[:, :, d + 1, 1:d + 1] = -a_flip
    om[:, :, 1:d + 1, d + 1] = a_flip
    return om


def _w_jets(geo: GeometryJets) -> np.ndarray:
    """Rank-4 curvature tractor, packed on all four axes."""
    d, sp = geo.dim, geo.space
    wt = sp.zeros(d + 2, d + 2, d + 2, d + 2)
    fac = float(d - 4)
    wt[1:d + 1, 1:d + 1, 1:d + 1, 1:d + 1] = fac * geo.weyl_low
    a_flip = geo.cotton.transpose(1, 2, 0, 3)          # [a, b, e] = A_eab
    wt[1:d + 1, 1:d + 1, d + 1, 1:d + 1] = -fac * a_flip
    wt[1:d + 1, 1:d + 1, 1:d + 1, d + 1] = fac * a_flip
    wt[d + 1, 1:d + 1, 1:d + 1, 1:d + 1] = -fac * geo.cotton
    wt[1:d + 1, d + 1, 1:d + 1, 1:d + 1] = fac * geo.cotton
    b_flip = geo.bach.transpose(1, 0, 2)               # [b, e] = B_eb
    wt[d + 1, 1:d + 1, d + 1, 1:d + 1] = b_flip
    wt[d + 1, 1:d + 1, 1:d + 1, d + 1] = -b_flip
    wt[1:d + 1, d + 1, d + 1, 1:d + 1] = -b_flip
    wt[1:d + 1, d + 1, 1:d + 1, d + 1] = b_flip
    return wt


def _field_jets(fld, point, order: int, outer_order: int = 0):
    """Packed jets plus slot data for a density or tractor field."""
    if isinstance(fld, ScalarField):
        return fld.jet(point, order, outer_order), fld.weight, 0
    return fld.jets(point, order, outer_order), fld.weight, fld.n_tractor


def _require_bare(fld):
    if getattr(fld, "tensor_slots", ()):
        raise ArgumentError("operator expects a density or bare tractor field")


# ---------------------------------------------------------------------------
# pointwise operations
# ---------------------------------------------------------------------------

def _value(geo: GeometryJets, comp, tensor_slots, n_tractor, weight,
           chart) -> TractorValue:
    return TractorValue(geo.dim, geo.point, chart.label, geo.value(geo.g),
                        weight, tensor_slots, n_tractor, geo.value(comp))


def projectors(chart: MetricChart, point) -> dict:
    """Basis injectors at a point: X, Y and the form injector Z.

    Z is returned with its tensor index raised (weight -1); lower it with
    the chart metric to compare against the lowered-form identities.
    """
    geo = GeometryJets(chart, point, order=1)
    d = chart.dim
    gval = geo.value(geo.g)
    x = np.zeros(d + 2)
    x[d + 1] = 1.0
    y = np.zeros(d + 2)
    y[0] = 1.0
    z = np.zeros((d, d + 2))
    z[:, 1:d + 1] = np.eye(d)

    def mk(slots, w, comp):
        return TractorValue(d, geo.point, chart.label, gval, w, slots, 1, comp)

    return {"X": mk((), 1, x), "Y": mk((), -1, y), "Z": mk(("u",), -1, z)}


def bundle_metric(chart: MetricChart, point) -> TractorValue:
    """The tractor metric itself as a packed rank-2 value."""
    geo = GeometryJets(chart, point, order=1)
    d = chart.dim
    gval = geo.value(geo.g)
    comp = np.zeros((d + 2, d + 2))
    comp[0, d + 1] = comp[d + 1, 0] = 1.0
    comp[1:d + 1, 1:d + 1] = gval
    return TractorValue(d, geo.point, chart.label, gval, 0, (), 2, comp)


def tractor_connection(fld, chart: MetricChart, point,
                       times: int = 1) -> TractorValue:
    """Iterated coupled covariant derivative of a packed field at a point."""
    if not 1 <= times <= 2:
        raise ArgumentError("times must be 1 or 2")
    geo = GeometryJets(chart, point)
    if times > geo.space.order:
        raise TruncationError("jets too shallow for the requested derivatives")
    arr, weight, n_tr = _field_jets(fld, point, geo.space.order)
    if n_tr == 0:
        raise ArgumentError("tractor connection needs a tractor-valued field")
    slots = tuple(fld.tensor_slots)
    for _ in range(times):
        arr = _tcov(geo, arr, slots, n_tr)
        slots = ("l",) + slots
    return _value(geo, arr, slots, n_tr, weight, chart)


def tractor_D(fld, chart: MetricChart, point) -> TractorValue:
    """Second-order splitting operator on a density or bare tractor field."""
    _require_bare(fld)
    geo = GeometryJets(chart, point)
    arr, weight, n_tr = _field_jets(fld, point, geo.space.order)
    out = _dop_jets(geo, arr, weight, (), n_tr)
    return _value(geo, out, (), n_tr + 1, weight - 1, chart)


def splitting(chart: MetricChart, point, sigma: ScalarField) -> TractorValue:
    """Scale tractor of a weight-1 density: (sigma, grad sigma, trace part)."""
    fld = splitting_field(chart, sigma)
    geo = GeometryJets(chart, point)
    arr = fld.jets(point, geo.space.order)
    return _value(geo, arr, (), 1, 0, chart)


def tractor_curvature(chart: MetricChart, point) -> TractorValue:
    """Curvature of the coupled connection, packed, tensor axes [a, b]."""
    geo = GeometryJets(chart, point)
    return _value(geo, _omega_jets(geo), ("l", "l"), 2, 0, chart)


def tractor_curvature_divergence(chart: MetricChart, point) -> TractorValue:
    """Raised-first-slot divergence of the packed curvature two-form."""
    geo = GeometryJets(chart, point)
    d, sp = geo.dim, geo.space
    dom = _tcov(geo, _omega_jets(geo), ("l", "l"), 2)
    acc = None
    for e in range(d):
        for a in range(d):
            term = jmul(sp, geo.ginv[e, a], dom[e, a])
            acc = term if acc is None else acc + term
    return _value(geo, acc, ("l",), 2, -2, chart)


def w_tractor(chart: MetricChart, point) -> TractorValue:
    """Rank-4 curvature tractor at a point (weight -2)."""
    geo = GeometryJets(chart, point)
    return _value(geo, _w_jets(geo), (), 4, -2, chart)


def hash_apply(a: TractorValue, t: TractorValue,
               double: bool = False) -> TractorValue:
    """Endomorphism action on every tractor slot of ``t``.

    Single action of a packed rank-2 value A: each slot B picks up
    -A^C{}_B.  The double action takes a packed rank-4 value, reading its
    first and second index pairs as two commuting endomorphism factors;
    same-slot terms compose the factors.
    """
    _same_frame(a, t)
    if a.tensor_slots:
        raise ArgumentError("endomorphism value must have no tensor slots")
    jm = pairing_matrix(a.metric)
    k = t.n_tractor
    off = len(t.tensor_slots)
    comp = t.components
    out = np.zeros_like(comp)
    if not double:
        if a.n_tractor != 2:
            raise ArgumentError("single hash action needs a rank-2 value")
        ku = jm @ a.components                         # A^C{}_B
        for j in range(k):
            out -= np.moveaxis(np.tensordot(comp, ku, axes=([off + j], [0])),
                               -1, off + j)
    else:
        if a.n_tractor != 4:
            raise ArgumentError("double hash action needs a rank-4 value")
        wu = np.einsum("ax,cy,xbyd->abcd", jm, jm, a.components)
        m = np.einsum("adca->cd", wu)
        for j in range(k):
            out += np.moveaxis(np.tensordot(comp, m, axes=([off + j], [0])),
                               -1, off + j)
        for i in range(k):
            for j in range(k):
                if i == j:
                    continue
                tm = np.moveaxis(comp, (off + j, off + i), (0, 1))
                term = np.einsum("xayc,xy...->ac...", wu, tm)
                out += np.moveaxis(term, (0, 1), (off + j, off + i))
    return TractorValue(t.dim, t.point, t.scale, t.metric,
                        a.weight + t.weight, t.tensor_slots, k, out)


def box_w(fld, chart: MetricChart, point):
    """Curvature-adjusted Laplacian; undefined in dimension 4.

    Densities come back as scalar TensorValues, tractor fields as packed
    values of the same shape, both at weight w - 2.
    """
    d = chart.dim
    if d == 4:
        raise DimensionError("the curvature-adjusted Laplacian needs d != 4")
    _require_bare(fld)
    geo = GeometryJets(chart, point)
    arr, weight, n_tr = _field_jets(fld, point, geo.space.order)
    lin = (_tlap(geo, arr, (), n_tr)
           - weight * jmul(geo.space, geo.jcal, arr))
    val = geo.value(lin)
    if n_tr:
        wv = geo.value(_w_jets(geo))
        wval = TractorValue(d, geo.point, chart.label, geo.value(geo.g), -2,
                            (), 4, wv)
        tval = _value(geo, arr, (), n_tr, weight, chart)
        val = val - hash_apply(wval, tval, double=True).components \
            / (2.0 * (d - 4))
        return TractorValue(d, geo.point, chart.label, geo.value(geo.g),
                            weight - 2, (), n_tr, val)
    return TensorValue(d, (), weight - 2, val)


def fD(fld, chart: MetricChart, point) -> TractorValue:
    """Splitting operator built on the curvature-adjusted Laplacian."""
    d = chart.dim
    if d == 4:
        raise DimensionError("the adjusted splitting operator needs d != 4")
    _require_bare(fld)
    geo = GeometryJets(chart, point)
    arr, weight, n_tr = _field_jets(fld, point, geo.space.order)
    f = d + 2 * weight - 2
    grad = geo.value(_tcov(geo, arr, (), n_tr))
    box = box_w(fld, chart, point)
    val = geo.value(arr)
    out = np.empty((d + 2,) + val.shape)
    out[0] = f * weight * val
    out[1:d + 1] = f * grad
    out[d + 1] = box.components
    return TractorValue(d, geo.point, chart.label, geo.value(geo.g),
                        weight - 1, (), n_tr + 1, out)
