"""Riemannian curvature pipeline at a point, driven entirely by metric jets.

Conventions (fixed once, everything else derived from them):

* ``(grad_a grad_b - grad_b grad_a) V^c = R_ab^c_d V^d`` defines the Riemann
  tensor index order.
* ``Ric_ab = R_ca^c_b``, ``Sc = g^{ab} Ric_ab``.
* ``Ric = (d-2) P + J g`` with ``J = Sc / (2(d-1))``; J carries conformal
  weight -2.
* ``R_abcd = C_abcd + 2 g_{c[a} P_{b]d} + 2 g_{d[b} P_{a]c}``.
* Cotton ``A_abc = grad_b P_ca - grad_c P_ba``; Bach
  ``B_ab = grad^c A_acb + P^{dc} C_dacb`` at weight -2.
* Laplacian is positive-energy: ``lap = -g^{ab} grad_a grad_b``.

Order bookkeeping from order-4 metric jets: Christoffel jets hold order 3,
Riemann/Schouten order 2, Cotton order 1, Bach order 0.  Consumers must not
read coefficients past these degrees; the public ops only expose values that
are exact under this schedule.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

from .charts import MetricChart, ScalarField, coordinate_jets
from .errors import ArgumentError, DimensionError, TruncationError
from .jets import Jet, jet_matrix_inverse, jet_space, jmul, jpartial
from .tensors import TensorValue


class GeometryJets:
    """Curvature data of one chart at one point, all entries jet-valued.

    Everything is computed lazily in a single shared jet space, so one
    instance serves the whole pipeline, including the doubly graded spaces
    used for differentiating derived curvature quantities.
    """

    def __init__(self, chart: MetricChart, point, order: int = 4,
                 outer_order: int = 0):
        self.chart = chart
        self.point = np.asarray(point, dtype=np.float64)
        self.dim = chart.dim
        self.space = jet_space(chart.dim, order, outer_order)

    @cached_property
    def g(self) -> np.ndarray:
        return self.chart.metric_jets(self.point, self.space.order,
                                      self.space.outer_order)

    @cached_property
    def ginv(self) -> np.ndarray:
        return jet_matrix_inverse(self.space, self.g)

    @cached_property
    def gamma(self) -> np.ndarray:
        """Christoffel symbols, gamma[c, a, b] = Gamma^c_ab."""
        d, sp = self.dim, self.space
        dg = np.stack([jpartial(sp, self.g, a) for a in range(d)])
        # sym[e, a, b] = d_a g_eb + d_b g_ea - d_e g_ab
        sym = dg.transpose(1, 0, 2, 3) + dg.transpose(1, 2, 0, 3) - dg
        prod = jmul(sp, self.ginv[:, :, None, None, :], sym[None, :, :, :, :])
        return 0.5 * prod.sum(axis=1)

    @cached_property
    def riemann_mixed(self) -> np.ndarray:
        """R[a, b, c, d] = R_ab^c_d."""
        sp, d = self.space, self.dim
        dgam = np.stack([jpartial(sp, self.gamma, e) for e in range(d)])
        t1 = dgam.transpose(0, 2, 1, 3, 4)            # d_a Gamma^c_bd
        q = jmul(sp, self.gamma[:, :, :, None, None, :],
                 self.gamma[None, None, :, :, :, :]).sum(axis=2)
        q1 = np.moveaxis(q, 0, 2)                      # Gamma^c_ae Gamma^e_bd
        return (t1 - t1.transpose(1, 0, 2, 3, 4)
                + q1 - q1.transpose(1, 0, 2, 3, 4))

    @cached_property
    def riemann_low(self) -> np.ndarray:
        """R[a, b, c, d] = R_abcd = g_ce R_ab^e_d."""
        prod = jmul(self.space, self.g[None, None, :, :, None, :],
                    self.riemann_mixed[:, :, None, :, :, :])
        return prod.sum(axis=3)

    @cached_property
    def ricci(self) -> np.ndarray:
        return np.trace(self.riemann_mixed, axis1=0, axis2=2)

    @cached_property
    def scalar(self) -> np.ndarray:
        return jmul(self.space, self.ginv, self.ricci).sum(axis=(0, 1))

    @cached_property
    def jcal(self) -> np.ndarray:
        if self.dim < 3:
            raise DimensionError("Schouten trace J needs dimension >= 3")
        return self.scalar / (2.0 * (self.dim - 1))

    @cached_property
    def schouten(self) -> np.ndarray:
        if self.dim < 3:
            raise DimensionError("Schouten tensor needs dimension >= 3")
        jg = jmul(self.space, self.g, self.jcal)
        return (self.ricci - jg) / (self.dim - 2)

    @cached_property
    def weyl_low(self) -> np.ndarray:
        sp = self.space
        gp = jmul(sp, self.g[:, :, None, None, :],
                  self.schouten[None, None, :, :, :])  # gp[a,b,c,d] = g_ab P_cd
        # 2 g_{c[a} P_{b]d} = g_ca P_bd - g_cb P_ad
        pair1 = gp.transpose(1, 2, 0, 3, 4) - gp.transpose(2, 1, 0, 3, 4)
        # 2 g_{d[b} P_{a]c} = g_db P_ac - g_da P_bc
        pair2 = gp.transpose(2, 1, 3, 0, 4) - gp.transpose(1, 2, 3, 0, 4)
        return self.riemann_low - pair1 - pair2

    @cached_property
    def weyl_mixed(self) -> np.ndarray:
        """C[a, b, c, d] = C_ab^c_d, the conformally invariant form."""
        prod = jmul(self.space, self.ginv[None, None, :, :, None, :],
                    self.weyl_low[:, :, None, :, :, :])
        return prod.sum(axis=3)

    @cached_property
    def cotton(self) -> np.ndarray:
        dp = self.cov_deriv(self.schouten, ("l", "l"))
        t = dp.transpose(2, 0, 1, 3)                   # t[a,b,c] = grad_b P_ca
        return t - t.transpose(0, 2, 1, 3)

    @cached_property
    def cotton_deriv(self) -> np.ndarray:
        return self.cov_deriv(self.cotton, ("l", "l", "l"))

    @cached_property
    def bach(self) -> np.ndarray:
        d, sp = self.dim, self.space
        da = self.cotton_deriv
        acc = sp.zeros(d, d)
        for c in range(d):
            for e in range(d):
                acc += jmul(sp, self.ginv[c, e], da[e, :, c, :])
        pup = self.raise_index(self.raise_index(self.schouten, 0), 1)
        for i in range(d):
            for c in range(d):
                acc += jmul(sp, pup[i, c], self.weyl_low[i, :, c, :])
        return acc

    # -- jet-level tensor calculus ------------------------------------------

    def cov_deriv(self, arr: np.ndarray, slots) -> np.ndarray:
        """Levi-Civita covariant derivative, new lower slot first.

        Weighted fields are handled in the trivialization by this chart's
        metric, where the density part of the connection vanishes.  Axes past
        the first ``len(slots)`` (other than the coefficient axis) are inert
        and ride along; callers owning such axes add their own corrections.
        """
        d, sp = self.dim, self.space
        rank = len(slots)
        if arr.shape[:rank] != (d,) * rank or arr.shape[-1] != sp.ncoeff:
            raise ArgumentError(f"field shape {arr.shape} does not match slots {slots}")
        out = np.stack([jpartial(sp, arr, a) for a in range(d)])
        trailing = (None,) * (arr.ndim - 2)
        for k, s in enumerate(slots):
            tm = np.moveaxis(arr, k, 0)
            acc = None
            for e in range(d):
                if s == "u":
                    # acc[c, a, rest] = Gamma^c_ae T^..e..
                    g_sl = self.gamma[(slice(None), slice(None), e) + trailing]
                else:
                    # acc[a, b, rest] = Gamma^e_ab T_..e..
                    g_sl = self.gamma[(e, slice(None), slice(None)) + trailing]
                term = jmul(sp, g_sl, tm[e][None, None])
                acc = term if acc is None else acc + term
            if s == "u":
                acc = acc.transpose((1, 0) + tuple(range(2, acc.ndim)))
                out += np.moveaxis(acc, 1, k + 1)
            else:
                out -= np.moveaxis(acc, 1, k + 1)
        return out

    def raise_index(self, arr: np.ndarray, axis: int) -> np.ndarray:
        """Contract one lower slot with the inverse-metric jets."""
        d, sp = self.dim, self.space
        tm = np.moveaxis(arr, axis, 0)
        lead = (slice(None), slice(None)) + (None,) * (tm.ndim - 2)
        prod = jmul(sp, self.ginv[lead], tm[None])
        return np.moveaxis(prod.sum(axis=1), 0, axis)

    def laplacian(self, arr: np.ndarray, slots) -> np.ndarray:
        """Positive-energy Laplacian -g^{ab} grad_a grad_b."""
        dd = self.cov_deriv(self.cov_deriv(arr, slots), ("l",) + tuple(slots))
        d, sp = self.dim, self.space
        acc = None
        for a in range(d):
            for b in range(d):
                term = jmul(sp, self.ginv[a, b], dd[a, b])
                acc = term if acc is None else acc + term
        return -acc

    def value(self, arr: np.ndarray) -> np.ndarray:
        return np.array(arr[..., 0])


@dataclass(frozen=True)
class TensorField:
    """Analytic tensor-valued field over chart coordinates, with weight."""

    dim: int
    slots: tuple
    weight: int
    generator: Callable = field(repr=False)
    label: str = "field"

    def jets(self, point, order: int = 4, outer_order: int = 0) -> np.ndarray:
        xs = coordinate_jets(self.dim, point, order, outer_order)
        rows = self.generator(xs)
        sp = jet_space(self.dim, order, outer_order)
        rank = len(self.slots)
        out = np.empty((self.dim,) * rank + (sp.ncoeff,))
        for idx in np.ndindex(*(self.dim,) * rank):
            entry = rows
            for i in idx:
                entry = entry[i]
            out[idx] = entry.coeffs if isinstance(entry, Jet) else \
                sp.constant(float(entry))
        return out


class CurvaturePacket:
    """Pointwise curvature of a chart, exposed as TensorValues.

    Entries are computed on first access; everything shares one set of
    metric jets.
    """

    def __init__(self, geo: GeometryJets):
        self._geo = geo

    @property
    def point(self):
        return self._geo.point

    @property
    def dim(self):
        return self._geo.dim

    def _tv(self, arr, slots, weight):
        return TensorValue(self.dim, slots, weight, self._geo.value(arr))

    @cached_property
    def g(self):
        return self._tv(self._geo.g, ("l", "l"), 0)

    @cached_property
    def ginv(self):
        return self._tv(self._geo.ginv, ("u", "u"), 0)

    @cached_property
    def conformal_metric(self):
        return TensorValue(self.dim, ("l", "l"), 2, self.g.components)

    @cached_property
    def inverse_conformal_metric(self):
        return TensorValue(self.dim, ("u", "u"), -2, self.ginv.components)

    @cached_property
    def gamma(self):
        return self._geo.value(self._geo.gamma)

    @cached_property
    def riemann(self):
        return self._tv(self._geo.riemann_low, ("l",) * 4, 0)

    @cached_property
    def riemann_mixed(self):
        return self._tv(self._geo.riemann_mixed, ("l", "l", "u", "l"), 0)

    @cached_property
    def ricci(self):
        return self._tv(self._geo.ricci, ("l", "l"), 0)

    @cached_property
    def scalar(self):
        return self._tv(self._geo.scalar, (), -2)

    @cached_property
    def jcal(self):
        return self._tv(self._geo.jcal, (), -2)

    @cached_property
    def schouten(self):
        return self._tv(self._geo.schouten, ("l", "l"), 0)

    @cached_property
    def weyl(self):
        return self._tv(self._geo.weyl_low, ("l",) * 4, 2)

    @cached_property
    def weyl_mixed(self):
        return self._tv(self._geo.weyl_mixed, ("l", "l", "u", "l"), 0)

    @cached_property
    def cotton(self):
        return self._tv(self._geo.cotton, ("l", "l", "l"), 0)

    @cached_property
    def bach(self):
        return self._tv(self._geo.bach, ("l", "l"), -2)


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------

def christoffel(chart: MetricChart, point, deriv_order: int = 0):
    """Christoffel symbols and coordinate derivatives there of.

    Returns a tuple of ``deriv_order + 1`` arrays: Gamma^c_ab indexed
    [c, a, b], then [e, c, a, b] = d_e Gamma^c_ab, then the second
    derivatives [e, f, c, a, b].
    """
    if not 0 <= deriv_order <= 2:
        raise ArgumentError("deriv_order must be 0, 1 or 2")
    geo = GeometryJets(chart, point)
    if deriv_order + 1 > geo.space.order:
        raise TruncationError("metric jets too shallow for requested derivatives")
    sp, d = geo.space, geo.dim
    out = [geo.value(geo.gamma)]
    if deriv_order >= 1:
        dgam = np.stack([jpartial(sp, geo.gamma, e) for e in range(d)])
        out.append(geo.value(dgam))
        if deriv_order == 2:
            ddgam = np.stack([np.stack([jpartial(sp, dgam[e], f) for f in range(d)])
                              for e in range(d)])
            out.append(geo.value(ddgam))
    return tuple(out)


def riemann(chart: MetricChart, point) -> CurvaturePacket:
    """Full curvature packet at a point (Riemann through Schouten lazily)."""
    return CurvaturePacket(GeometryJets(chart, point))


def weyl(packet: CurvaturePacket) -> TensorValue:
    return packet.weyl


def cotton(chart: MetricChart, point) -> TensorValue:
    return riemann(chart, point).cotton


def bach(chart: MetricChart, point) -> TensorValue:
    return riemann(chart, point).bach


def covariant_derivative(fld, chart: MetricChart, point,
                         times: int = 1) -> TensorValue:
    """Iterated Levi-Civita derivative of an analytic field at a point.

    Accepts a TensorField or a ScalarField; each application prepends one
    lower slot.  Weighted fields are differentiated in the trivialization by
    the chart metric.
    """
    if not 1 <= times <= 2:
        raise ArgumentError("times must be 1 or 2")
    geo = GeometryJets(chart, point)
    if isinstance(fld, ScalarField):
        slots = ()
        arr = fld.jet(point)
    else:
        slots = tuple(fld.slots)
        arr = fld.jets(point)
    w = fld.weight
    for _ in range(times):
        arr = geo.cov_deriv(arr, slots)
        slots = ("l",) + slots
    return TensorValue(chart.dim, slots, w, geo.value(arr))


def bianchi_residuals(chart: MetricChart, point) -> dict:
    """Sup-norm residuals of the four differential curvature identities.

    r1: skew gradient of Weyl against its Cotton source terms;
    r2: (d-3) A_abc - div C (first slot);
    r3: div P - grad J;
    r4: div A (first slot).
    """
    geo = GeometryJets(chart, point)
    d, sp = geo.dim, geo.space
    dcv = geo.value(geo.cov_deriv(geo.weyl_low, ("l",) * 4))
    a_val = geo.value(geo.cotton)
    g_val = geo.value(geo.g)
    ginv_val = geo.value(geo.ginv)

    # rhs[a1,a2,a3,c,d] = g_{c a1} A_{d a2 a3} - g_{d a1} A_{c a2 a3}
    rhs = (np.einsum("ci,djk->ijkcd", g_val, a_val)
           - np.einsum("di,cjk->ijkcd", g_val, a_val))
    t = dcv - rhs
    skew = (t + np.transpose(t, (1, 2, 0, 3, 4)) + np.transpose(t, (2, 0, 1, 3, 4))
            - np.transpose(t, (1, 0, 2, 3, 4)) - np.transpose(t, (0, 2, 1, 3, 4))
            - np.transpose(t, (2, 1, 0, 3, 4))) / 6.0
    r1 = float(np.max(np.abs(skew)))

    divc = np.einsum("de,deabc->abc", ginv_val, dcv)
    r2 = float(np.max(np.abs((d - 3) * a_val - divc)))

    dp = geo.value(geo.cov_deriv(geo.schouten, ("l", "l")))
    dj = geo.value(np.stack([jpartial(sp, geo.jcal, a) for a in range(d)]))
    r3 = float(np.max(np.abs(np.einsum("ae,eab->b", ginv_val, dp) - dj)))

    dav = geo.value(geo.cotton_deriv)
    r4 = float(np.max(np.abs(np.einsum("ae,eabc->bc", ginv_val, dav))))
    return {"r1": r1, "r2": r2, "r3": r3, "r4": r4}
