"""Hypersurface geometry along regular level sets: conormal, mean curvature,
second fundamental form, the normal tractor, minimal scales and the
restriction isomorphism onto the orthogonal complement of the normal tractor.

A surface is always the zero set of a scalar field with nonvanishing
gradient.  The unit conormal is n_a = grad phi / |grad phi| extended off the
surface by the same formula, and the mean curvature

    H = (grad_a n^a - n^a n^b grad_a n_b) / (d - 1)

does not depend on that extension along the surface.  The normal tractor
N = (0, n_a, -H) has h(N, N) = 1 and equals the scale tractor of a
scalar-negative almost-Einstein structure along its singularity set.

Intrinsic boundary charts (and with them the intrinsic-versus-ambient
connection, curvature and W comparisons) are available for the model
surfaces only: round spheres, ellipsoids and hyperplanes sitting inside a
flat chart, each carrying a closed-form stereographic or affine embedding.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from ._tables import MAX_ORDER
from .charts import (Embedding, MetricChart, ScalarField, conformal_rescale,
                     euclidean, pullback_chart, stereographic_sphere_embedding)
from .curvature import GeometryJets
from .errors import (ArgumentError, DomainError, SingularityError,
                     TruncationError, UnsupportedModelError)
from .jets import (Jet, jcompose, jet_matrix_inverse, jet_space, jmul,
                   jpartial, jrecip)
from .tensors import TensorValue
from .tractor import (TractorField, TractorValue, pairing_matrix, splitting,
                      tractor_connection, tractor_curvature, w_tractor)

GRADIENT_FLOOR = 1e-8
LOCATOR_TOL = 1e-10


@dataclass(frozen=True)
class LevelSetHypersurface:
    """Zero set of a defining scalar on one chart.

    ``quadratic`` holds (q, beta, Q) when the defining function is the
    closed form q + beta . x + x . Q x / 2 on a flat chart; together with
    ``embedding`` (a parametrization of the surface itself) it unlocks the
    intrinsic-chart comparisons.  Generic level sets leave both unset and
    keep the pointwise operations only.
    """

    chart: MetricChart
    phi: ScalarField
    label: str = "level set"
    quadratic: tuple | None = None
    embedding: Embedding | None = None

    def __post_init__(self):
        if self.phi.dim != self.chart.dim:
            raise ArgumentError("defining field dimension does not match chart")

    def locate(self, seed, max_steps: int = 60):
        """Newton-project a seed point onto the zero set."""
        p = np.asarray(seed, dtype=np.float64).copy()
        d = self.chart.dim
        eye = np.eye(d, dtype=int)
        for _ in range(max_steps):
            jp = Jet(d, 1, self.phi.jet(p, 1))
            val = jp.value
            grad = np.array([jp.derivative(tuple(eye[i])) for i in range(d)])
            gsq = float(grad @ grad)
            if gsq < GRADIENT_FLOOR ** 2:
                raise SingularityError(
                    "degenerate level set: the defining gradient vanishes")
            if abs(val) < 1e-14:
                break
            p = p - (val / gsq) * grad
        if abs(self.phi.value(p)) > LOCATOR_TOL:
            raise DomainError("Newton projection failed to reach the level set")
        return p

    def require_on_surface(self, point, tol: float = 1e-8):
        if abs(self.phi.value(point)) > tol:
            raise DomainError(
                f"point {np.asarray(point).tolist()} is not on {self.label}")

    def tangent_frame(self, point) -> np.ndarray:
        """Rows: metric-orthonormal tangent vectors completing the normal."""
        dat = _point_data(self, point)
        d = self.chart.dim
        frame = []
        for k in np.argsort(np.abs(dat.n_low)):
            v = np.zeros(d)
            v[k] = 1.0
            v = v - dat.n_low[k] * dat.n_up
            for w in frame:
                v = v - float(v @ dat.g @ w) * w
            nrm = float(v @ dat.g @ v)
            if nrm < 1e-20:
                continue
            frame.append(v / np.sqrt(nrm))
            if len(frame) == d - 1:
                break
        if len(frame) != d - 1:
            raise SingularityError("could not complete a tangent frame")
        return np.array(frame)


@dataclass(frozen=True)
class _PointData:
    g: np.ndarray
    ginv: np.ndarray
    val: float
    grad: np.ndarray
    n_low: np.ndarray
    n_up: np.ndarray
    dn: np.ndarray
    mean: float


def _point_data(surface: LevelSetHypersurface, point) -> _PointData:
    """Conormal, its covariant derivative and H at one point."""
    ch = surface.chart
    d = ch.dim
    geo = GeometryJets(ch, point, order=2)
    g = geo.value(geo.g)
    gam = geo.value(geo.gamma)
    ginv = np.linalg.inv(g)
    jp = Jet(d, 2, surface.phi.jet(point, 2))
    eye = np.eye(d, dtype=int)
    val = jp.value
    u = np.array([jp.derivative(tuple(eye[i])) for i in range(d)])
    hess = np.array([[jp.derivative(tuple(eye[i] + eye[j])) for j in range(d)]
                     for i in range(d)])
    covh = hess - np.einsum("eab,e->ab", gam, u)
    uup = ginv @ u
    rsq = float(uup @ u)
    if rsq < GRADIENT_FLOOR ** 2:
        raise SingularityError(
            "degenerate level set: the defining gradient vanishes")
    r = np.sqrt(rsq)
    n_low = u / r
    n_up = uup / r
    dr = (covh @ uup) / r
    dn = covh / r - np.outer(dr, n_low) / r
    divn = float(np.einsum("ab,ab->", ginv, dn))
    nn = float(n_up @ dn @ n_up)
    mean = (divn - nn) / (d - 1.0)
    return _PointData(g, ginv, val, u, n_low, n_up, dn, mean)


def normal_and_mean_curvature(surface: LevelSetHypersurface, point):
    """Unit conormal (weight 1) and mean curvature in the chart scale."""
    dat = _point_data(surface, point)
    n = TensorValue(surface.chart.dim, ("l",), 1, dat.n_low)
    return n, dat.mean


def second_fundamental_form(surface: LevelSetHypersurface, point):
    """II in an orthonormal tangent frame plus its umbilicity residual."""
    dat = _point_data(surface, point)
    frame = surface.tangent_frame(point)
    ii = frame @ dat.dn @ frame.T
    ii = 0.5 * (ii + ii.T)
    m = surface.chart.dim - 1
    residual = float(np.max(np.abs(ii - (np.trace(ii) / m) * np.eye(m))))
    return ii, residual


def normal_tractor(surface: LevelSetHypersurface, point) -> TractorValue:
    """The tractor (0, n_a, -H) along the surface."""
    dat = _point_data(surface, point)
    d = surface.chart.dim
    comp = np.zeros(d + 2)
    comp[1:d + 1] = dat.n_low
    comp[d + 1] = -dat.mean
    return TractorValue(d, np.asarray(point, dtype=np.float64),
                        surface.chart.label, dat.g, 0, (), 1, comp)


def check_I_equals_N(ae, point) -> float:
    """Slotwise gap between the normalized scale tractor and N on the zero set."""
    i2 = ae.i_norm_sq
    if i2 < GRADIENT_FLOOR:
        raise ArgumentError(
            "scale tractor comparison needs a scalar-negative structure")
    surface = LevelSetHypersurface(ae.chart, ae.sigma, label="{sigma=0}")
    surface.require_on_surface(point)
    fac = 1.0 / np.sqrt(i2)
    sig = ae.sigma
    unit = ScalarField(sig.dim, lambda xs: sig.generator(xs) * fac,
                       weight=1, label=f"unit({sig.label})")
    i_val = splitting(ae.chart, point, unit)
    n_val = normal_tractor(surface, point)
    return float(np.max(np.abs(i_val.components - n_val.components)))


# ---------------------------------------------------------------------------
# the minimal scale
# ---------------------------------------------------------------------------

def _exponent_table(surface: LevelSetHypersurface, p, m: int) -> np.ndarray:
    """Jet coefficients of -s H about p, s the normalized defining function."""
    ch, phi = surface.chart, surface.phi
    d = ch.dim
    sp = jet_space(d, m)
    mid = jet_space(d, m + 1)
    hi = jet_space(d, m + 2)
    nm, nmid = sp.ncoeff, mid.ncoeff

    ph = phi.jet(p, m + 2)
    u_mid = np.stack([jpartial(hi, ph, b)[:nmid] for b in range(d)])
    hess = np.stack([jpartial(mid, u_mid, a)[..., :nm] for a in range(d)])
    u = u_mid[:, :nm]

    gam = GeometryJets(ch, p, order=m + 1).gamma[..., :nm]
    g = ch.metric_jets(p, m)
    ginv = jet_matrix_inverse(sp, g)

    covh = hess - sum(jmul(sp, gam[e], u[e]) for e in range(d))
    uup = sum(jmul(sp, ginv[:, b], u[b]) for b in range(d))
    gsq = sum(jmul(sp, uup[e], u[e]) for e in range(d))
    if gsq[0] < GRADIENT_FLOOR ** 2:
        raise SingularityError(
            "degenerate level set: the defining gradient vanishes")
    r = jcompose(sp, gsq, "sqrt")
    rinv = jrecip(sp, r)
    dr = jmul(sp, sum(jmul(sp, covh[:, e], uup[e]) for e in range(d)), rinv)
    n_low = jmul(sp, u, rinv)
    dn = jmul(sp, covh, rinv) - jmul(sp, jmul(sp, dr[:, None], n_low[None, :]),
                                     rinv)
    divn = sum(jmul(sp, ginv[a, b], dn[a, b])
               for a in range(d) for b in range(d))
    nup = jmul(sp, uup, rinv)
    nn = sum(jmul(sp, jmul(sp, nup[a], nup[b]), dn[a, b])
             for a in range(d) for b in range(d))
    mean = (divn - nn) / (d - 1.0)
    s = jmul(sp, ph[:nm], rinv)
    return -jmul(sp, s, mean)


def minimal_exponent(surface: LevelSetHypersurface) -> ScalarField:
    """The rescaling exponent -s H that makes the surface minimal.

    The emitted field supports plain jets of order at most 2 (that costs
    order + 2 derivatives of the defining function, and jets stop at order
    4); curvature consumers needing deeper jets must fall back to surfaces
    with closed-form exponents.
    """
    d = surface.chart.dim

    def gen(xs):
        x0 = xs[0]
        if x0.outer_order:
            raise TruncationError(
                "minimal-scale exponent has no doubly graded jets")
        if x0.order + 2 > MAX_ORDER:
            raise TruncationError(
                "minimal-scale exponent supports jet order <= 2")
        p = np.array([x.value for x in xs])
        tab = _exponent_table(surface, p, x0.order)
        sp = jet_space(d, x0.order)
        disp = [xs[i] - float(p[i]) for i in range(d)]
        out = x0 * 0.0 + float(tab[0])
        for row, coeff in zip(sp.exps.tolist()[1:], tab[1:].tolist()):
            if coeff == 0.0:
                continue
            term = None
            for i, e in enumerate(row):
                for _ in range(e):
                    term = disp[i] if term is None else term * disp[i]
            out = out + coeff * term
        return out

    return ScalarField(d, gen, 0, f"minimal({surface.label})")


def minimal_scale(surface: LevelSetHypersurface) -> MetricChart:
    """Chart of the conformal rescaling in which the surface is minimal."""
    return conformal_rescale(surface.chart, minimal_exponent(surface))


# ---------------------------------------------------------------------------
# restriction onto the orthogonal complement of N
# ---------------------------------------------------------------------------

def project_orthogonal(surface: LevelSetHypersurface, t: TractorValue,
                       point=None) -> TractorValue:
    """Remove the h(N, t) N component of a rank-1 tractor value."""
    point = t.point if point is None else point
    _require_plain_tractor(t)
    dat = _point_data(surface, point)
    d = surface.chart.dim
    n_comp = np.concatenate(([0.0], dat.n_low, [-dat.mean]))
    pair = float(-dat.mean * t.components[0]
                 + dat.n_up @ t.components[1:d + 1])
    return t.replace_components(t.components - pair * n_comp)


def restrict_tractor(surface: LevelSetHypersurface, t: TractorValue,
                     tol: float = 1e-9) -> TractorValue:
    """Intrinsic triple of an N-orthogonal tractor at a surface point.

    The slots change by (sigma, mu_b, rho) -> (sigma, mu_b - H n_b sigma,
    rho + H^2 sigma / 2); the middle slot comes out tangential and is kept
    in ambient components.
    """
    _require_plain_tractor(t)
    point = t.point
    surface.require_on_surface(point)
    dat = _point_data(surface, point)
    d = surface.chart.dim
    sig = t.components[0]
    mu = t.components[1:d + 1]
    rho = t.components[d + 1]
    pair = float(-dat.mean * sig + dat.n_up @ mu)
    if abs(pair) > tol * (1.0 + float(np.max(np.abs(t.components)))):
        raise ArgumentError(
            "tractor is not orthogonal to the normal tractor; project first")
    comp = np.concatenate((
        [sig], mu - dat.mean * dat.n_low * sig,
        [rho + 0.5 * dat.mean ** 2 * sig]))
    return TractorValue(d, point, f"{t.scale}|{surface.label}", t.metric,
                        t.weight, (), 1, comp)


def _require_plain_tractor(t: TractorValue):
    if t.tensor_slots or t.n_tractor != 1:
        raise ArgumentError("restriction expects a bare rank-1 tractor value")


# ---------------------------------------------------------------------------
# model surfaces with intrinsic charts
# ---------------------------------------------------------------------------

def sphere_level_set(dim: int, radius: float = 1.0, center=None
                     ) -> LevelSetHypersurface:
    """|x - c|^2 - r^2 in a flat chart, outward conormal."""
    if radius <= 0:
        raise ArgumentError("sphere radius must be positive")
    center = np.zeros(dim) if center is None else \
        np.asarray(center, dtype=np.float64)
    if center.shape != (dim,):
        raise ArgumentError("center length does not match the dimension")
    r2 = float(radius ** 2)

    def gen(xs):
        acc = -r2
        for i, x in enumerate(xs):
            acc = (x - float(center[i])) * (x - float(center[i])) + acc
        return acc

    phi = ScalarField(dim, gen, 0, "sphere")
    quad = (float(center @ center - r2), -2.0 * center, 2.0 * np.eye(dim))
    emb = _shift_embedding(
        stereographic_sphere_embedding(dim, radii=[radius] * dim), center)
    return LevelSetHypersurface(euclidean(dim), phi, f"S({radius})",
                                quad, emb)


def ellipsoid_level_set(radii) -> LevelSetHypersurface:
    """sum (x_a / r_a)^2 - 1 in a flat chart."""
    radii = np.asarray(radii, dtype=np.float64)
    dim = radii.shape[0]
    if np.any(radii <= 0):
        raise ArgumentError("ellipsoid radii must be positive")
    w = 1.0 / radii ** 2

    def gen(xs):
        acc = -1.0
        for i, x in enumerate(xs):
            acc = float(w[i]) * x * x + acc
        return acc

    phi = ScalarField(dim, gen, 0, "ellipsoid")
    quad = (-1.0, np.zeros(dim), 2.0 * np.diag(w))
    emb = stereographic_sphere_embedding(dim, radii=radii)
    return LevelSetHypersurface(euclidean(dim), phi, "ellipsoid", quad, emb)


def hyperplane_level_set(dim: int, normal=None, offset: float = 0.0
                         ) -> LevelSetHypersurface:
    """n . x - offset in a flat chart, unit normal."""
    normal = np.eye(dim)[0] if normal is None else \
        np.asarray(normal, dtype=np.float64)
    nrm = float(np.linalg.norm(normal))
    if normal.shape != (dim,) or nrm < GRADIENT_FLOOR:
        raise ArgumentError("need a nonzero normal of the chart dimension")
    nv = normal / nrm
    off = float(offset) / nrm

    def gen(xs):
        acc = -off
        for i, x in enumerate(xs):
            acc = float(nv[i]) * x + acc
        return acc

    phi = ScalarField(dim, gen, 0, "hyperplane")
    quad = (-off, nv.copy(), np.zeros((dim, dim)))
    emb = _affine_embedding(nv, off)
    return LevelSetHypersurface(euclidean(dim), phi, "hyperplane", quad, emb)


def singularity_surface(ae) -> LevelSetHypersurface:
    """Zero set of a scalar-negative quadric scale, with intrinsic chart."""
    if ae.quadric is None:
        raise UnsupportedModelError(
            "intrinsic charts exist for the flat quadric models only")
    a, b, c = ae.quadric
    i2 = float(b @ b - 4.0 * a * c)
    if i2 < GRADIENT_FLOOR:
        raise ArgumentError("singularity surface needs |I|^2 > 0")
    dim = b.shape[0]
    quad = (float(a), b.copy(), 2.0 * c * np.eye(dim))
    if abs(c) < 1e-12:
        nrm = float(np.linalg.norm(b))
        emb = _affine_embedding(b / nrm, -a / nrm)
    else:
        center = -b / (2.0 * c)
        radius = np.sqrt(i2) / (2.0 * abs(c))
        emb = _shift_embedding(
            stereographic_sphere_embedding(dim, radii=[radius] * dim), center)
    return LevelSetHypersurface(ae.chart, ae.sigma, "{sigma=0}", quad, emb)


def _shift_embedding(emb: Embedding, offset) -> Embedding:
    off = np.asarray(offset, dtype=np.float64)
    if not np.any(off):
        return emb

    def mapping(us):
        return [x + float(off[a]) for a, x in enumerate(emb.mapping(us))]

    return Embedding(emb.intrinsic_dim, emb.ambient_dim, mapping,
                     emb.jacobian, f"shift({emb.label})")


def _affine_embedding(unit_normal, offset: float) -> Embedding:
    nv = np.asarray(unit_normal, dtype=np.float64)
    d = nv.shape[0]
    q, _ = np.linalg.qr(np.column_stack([nv, np.eye(d)[:, :d - 1]]))
    tang = q[:, 1:d]
    base = offset * nv

    def mapping(us):
        zero = us[0] * 0.0
        return [zero + float(base[a])
                + sum(float(tang[a, i]) * us[i] for i in range(d - 1))
                for a in range(d)]

    def jacobian(us):
        return [[float(tang[a, i]) for i in range(d - 1)] for a in range(d)]

    return Embedding(d - 1, d, mapping, jacobian, "hyperplane_affine")


def boundary_chart(surface: LevelSetHypersurface) -> MetricChart:
    """Intrinsic chart of a model surface via its closed-form embedding."""
    if surface.embedding is None:
        raise UnsupportedModelError(
            f"no intrinsic chart is available for {surface.label}")
    return pullback_chart(surface.chart, surface.embedding)


def _chart_coordinates(surface: LevelSetHypersurface, point) -> np.ndarray:
    """Invert the model embedding at a surface point."""
    emb = surface.embedding
    p = np.asarray(point, dtype=np.float64)
    zero = np.zeros(emb.intrinsic_dim)
    if emb.label.startswith("hyperplane"):
        jac = np.array(_numeric_jacobian(emb, zero))
        base = np.asarray(_numeric_mapping(emb, zero))
        return jac.T @ (p - base)
    q, beta, qmat = surface.quadratic
    qd = np.diag(qmat)
    center = -beta / qd
    level = float(center @ (qd * center)) - 2.0 * q
    radii = np.sqrt(level / qd)
    w = (p - center) / radii
    if w[-1] > 1.0 - 1e-8:
        raise DomainError("surface point is at or beyond the chart pole")
    return w[:-1] / (1.0 - w[-1])


def _numeric_mapping(emb: Embedding, us: np.ndarray):
    xs = [Jet(emb.intrinsic_dim, 0, [float(u)]) for u in us]
    return [entry.value if isinstance(entry, Jet) else float(entry)
            for entry in emb.mapping(xs)]


# ---------------------------------------------------------------------------
# intrinsic versus ambient comparisons
# ---------------------------------------------------------------------------

def intrinsic_vs_ambient(source, point, seed: int = 0) -> dict:
    """Connection / curvature / W gaps between the surface and the ambient.

    ``source`` is either a quadric almost-Einstein structure (whose
    singularity sphere or hyperplane carries the intrinsic chart) or a model
    level set built by the constructors in this module.  In dimension 3 the
    intrinsic tractor connection is defined as the projected ambient one,
    so only the (identically zero) connection entry is reported.
    """
    if isinstance(source, LevelSetHypersurface):
        surface = source
    else:
        surface = singularity_surface(source)
    if surface.quadratic is None or surface.embedding is None:
        raise UnsupportedModelError(
            "intrinsic comparison needs a model surface with an embedding")
    d = surface.chart.dim
    surface.require_on_surface(point)
    if d == 3:
        return {"connection": 0.0}
    y0 = _chart_coordinates(surface, point)
    chart_s = boundary_chart(surface)
    out = {"connection": _connection_gap(surface, point, y0, chart_s, seed)}
    curv, ww, ncontr = _curvature_gaps(surface, point, y0, chart_s)
    out["curvature"] = curv
    out["ww"] = ww
    if ncontr is not None:
        out["normal_contraction"] = ncontr
    return out


def _quadratic_jets(surface: LevelSetHypersurface, xs):
    """Unit conormal and mean curvature of a quadratic zero set, as jets."""
    q, beta, qmat = surface.quadratic
    d = surface.chart.dim
    u = [float(beta[b]) + sum(float(qmat[b, e]) * xs[e] for e in range(d))
         + 0.0 * xs[0] for b in range(d)]
    gsq = u[0] * u[0]
    for ub in u[1:]:
        gsq = gsq + ub * ub
    r = gsq.sqrt()
    n = [ub / r for ub in u]
    uqu = 0.0 * xs[0]
    for bb in range(d):
        for e in range(d):
            if qmat[bb, e]:
                uqu = uqu + float(qmat[bb, e]) * u[bb] * u[e]
    mean = (float(np.trace(qmat)) / r - uqu / (r * r * r)) / (d - 1.0)
    return n, mean


def normal_tractor_field(surface: LevelSetHypersurface) -> TractorField:
    """Off-surface (0, n_a, -H) field of a quadratic model level set."""
    if surface.quadratic is None:
        raise UnsupportedModelError(
            "the closed-form normal field needs a quadratic model surface")
    d = surface.chart.dim

    def gen(xs):
        n, mean = _quadratic_jets(surface, xs)
        return [0.0 * xs[0]] + n + [-mean]

    return TractorField(d, 0, gen, label=f"N({surface.label})")


def _section_tables(dim: int, seed: int):
    rng = np.random.default_rng(seed)
    tables = []
    for _ in range(dim + 2):
        tab = {}
        for alpha in np.ndindex(*(3,) * dim):
            if sum(alpha) <= 2:
                tab[alpha] = 0.4 * rng.uniform(-1.0, 1.0)
        tables.append(tab)
    return tables


def _table_jet(xs, table):
    acc = 0.0 * xs[0]
    for alpha, coeff in table.items():
        term = None
        for i, e in enumerate(alpha):
            for _ in range(e):
                term = xs[i] if term is None else term * xs[i]
        acc = acc + (coeff if term is None else coeff * term)
    return acc


def _perp_and_intrinsic_fields(surface: LevelSetHypersurface, seed: int):
    """An N-orthogonal ambient section and its intrinsic counterpart."""
    d = surface.chart.dim
    emb = surface.embedding
    tables = _section_tables(d, seed)

    def raw(xs):
        return [_table_jet(xs, tab) for tab in tables]

    def perp_entries(xs):
        sig, *mu_rho = raw(xs)
        mu, rho = mu_rho[:d], mu_rho[d]
        n, mean = _quadratic_jets(surface, xs)
        pair = -mean * sig
        for b in range(d):
            pair = pair + n[b] * mu[b]
        return ([sig] + [mu[b] - pair * n[b] for b in range(d)]
                + [rho + pair * mean], n, mean, sig)

    def perp_gen(xs):
        entries, _, _, _ = perp_entries(xs)
        return entries

    def intrinsic_gen(ys):
        xs = emb.mapping(ys)
        jac = emb.jacobian(ys)
        entries, n, mean, _ = perp_entries(xs)
        sig, mu, rho = entries[0], entries[1:d + 1], entries[d + 1]
        mu_s = [mu[b] - mean * n[b] * sig for b in range(d)]
        rho_s = rho + 0.5 * mean * mean * sig
        mu_int = [sum(jac[a][i] * mu_s[a] for a in range(d))
                  for i in range(d - 1)]
        return [sig] + mu_int + [rho_s]

    perp = TractorField(d, 0, perp_gen, label="perp section")
    intr = TractorField(d - 1, 0, intrinsic_gen, label="intrinsic section")
    return perp, intr


def _restrict_vector(surface, dat, jac0, comp):
    """Project an ambient packed vector to N^perp and restrict it."""
    d = surface.chart.dim
    sig = comp[0]
    mu = np.array(comp[1:d + 1])
    rho = comp[d + 1]
    pair = -dat.mean * sig + float(dat.n_up @ mu)
    mu = mu - pair * dat.n_low
    rho = rho + pair * dat.mean
    mu_s = mu - dat.mean * dat.n_low * sig
    rho_s = rho + 0.5 * dat.mean ** 2 * sig
    return np.concatenate(([sig], jac0.T @ mu_s, [rho_s]))


def _lift_matrix(surface, dat, jac0, gs0) -> np.ndarray:
    """Right inverse of the restriction: intrinsic packing into N^perp."""
    d = surface.chart.dim
    lift = np.zeros((d + 2, d + 1))
    lift[0, 0] = 1.0
    back = dat.g @ jac0 @ np.linalg.inv(gs0)
    lift[1:d + 1, 1:d] = back
    lift[1:d + 1, 0] = dat.mean * dat.n_low
    lift[d + 1, 0] = -0.5 * dat.mean ** 2
    lift[d + 1, d] = 1.0
    return lift


def _connection_gap(surface, point, y0, chart_s, seed) -> float:
    d = surface.chart.dim
    dat = _point_data(surface, point)
    perp, intr = _perp_and_intrinsic_fields(surface, seed)
    conn_amb = tractor_connection(perp, surface.chart, point).components
    conn_int = tractor_connection(intr, chart_s, y0).components
    jac0 = np.array(_numeric_jacobian(surface.embedding, y0))
    worst = 0.0
    for i in range(d - 1):
        v_amb = jac0[:, i]
        d_amb = np.tensordot(v_amb, conn_amb, axes=(0, 0))
        moved = _restrict_vector(surface, dat, jac0, d_amb)
        gap = np.max(np.abs(moved - conn_int[i]))
        scale = 1.0 + np.max(np.abs(conn_int[i]))
        worst = max(worst, float(gap / scale))
    return worst


def _curvature_gaps(surface, point, y0, chart_s):
    d = surface.chart.dim
    dat = _point_data(surface, point)
    jac0 = np.array(_numeric_jacobian(surface.embedding, y0))
    gs0 = chart_s.metric_matrix(y0)
    lift = _lift_matrix(surface, dat, jac0, gs0)
    jm_amb = pairing_matrix(surface.chart.metric_matrix(point))
    jm_int = pairing_matrix(gs0)
    pa = jm_amb @ lift
    pi = jm_int

    om_amb = tractor_curvature(surface.chart, point).components
    om_int = tractor_curvature(chart_s, y0).components
    worst = 0.0
    for i in range(d - 1):
        for j in range(i + 1, d - 1):
            m_amb = np.einsum("a,b,abCE->CE", jac0[:, i], jac0[:, j], om_amb)
            m_int = om_int[i, j]
            amb = pa.T @ m_amb @ pa
            intr = pi.T @ m_int @ pi
            scale = 1.0 + np.max(np.abs(intr))
            worst = max(worst, float(np.max(np.abs(amb - intr)) / scale))

    w_amb = w_tractor(surface.chart, point).components
    w_int = w_tractor(chart_s, y0).components
    amb4 = np.einsum("ABCE,Ak,Bl,Cm,En->klmn", w_amb, pa, pa, pa, pa)
    int4 = np.einsum("ABCE,Ak,Bl,Cm,En->klmn", w_int, pi, pi, pi, pi)
    both = (d - 5.0) * amb4 - (d - 4.0) * int4
    scale = 1.0 + max(np.max(np.abs(amb4)), np.max(np.abs(int4)))

    ncontr = None
    if d != 4:
        # the sharpened tangential statement: normal insertions vanish
        m = np.einsum("a,bi,abCE->iCE", dat.n_up, jac0, om_amb)
        ncontr = float(np.max(np.abs(m)))
    return worst, float(np.max(np.abs(both)) / scale), ncontr


def _numeric_jacobian(emb: Embedding, us) -> list:
    xs = [Jet(emb.intrinsic_dim, 0, [float(u)]) for u in np.asarray(us)]
    rows = emb.jacobian(xs)
    return [[entry.value if isinstance(entry, Jet) else float(entry)
             for entry in row] for row in rows]
