"""Flat ambient model of the conformal sphere.

Ambient space is R^{d+2} with the bilinear form diag(-1, +1, ..., +1) of
signature (d+1, 1).  Points of the sphere are rays of the forward null cone
(first coordinate positive), reached through the round lift

    X(u) = (1, Y(u)),   Y(u) the inverse stereographic image of u in S^d.

Every ambient vector I with ``H(I, X) > 0`` on some cap cuts the cone in the
hyperplane section X_I = X / H(I, X); the pullback of the form along that
section is ``4 delta / ((1+|u|^2)^2 H(I, X)^2)``, giving the round, flat and
hyperbolic metrics for timelike, null and spacelike unit I.  Constant
ambient vectors correspond to parallel tractors: their pairing against the
lift is a one-parameter family of almost-Einstein scales, and the packed
triple (sigma, mu_a, rho) of such a scale reassembles the constant vector as

    V = rho X_I + sigma z_I + mu^a d_a X_I

with z_I the null partner of the section (H(z, X_I) = 1, H(z, d_a X_I) = 0).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .almost_einstein import AEStructure, ae_structure, parallel_residual
from .charts import MetricChart, ScalarField, coordinate_jets
from .errors import ArgumentError, DimensionError, DomainError
from .jets import Jet, jet_space, jpartial
from .tractor import TractorValue, splitting, tractor_curvature, tractor_metric

CONE_TOL = 1e-12


def ambient_form(dim: int) -> np.ndarray:
    """diag(-1, +1, ..., +1) on R^{dim+2}."""
    h = np.eye(dim + 2)
    h[0, 0] = -1.0
    return h


def null_pair_basis(dim: int) -> np.ndarray:
    """Columns of the (p, q, y^1..y^d) basis in which the form is
    antidiag(1,1) on the null pair plus the identity: p, q null with
    pairing 1, spanning the 0 and last coordinate plane."""
    d2 = dim + 2
    b = np.zeros((d2, d2))
    r = 1.0 / np.sqrt(2.0)
    b[0, 0], b[d2 - 1, 0] = r, r
    b[0, 1], b[d2 - 1, 1] = -r, r
    for i in range(dim):
        b[1 + i, 2 + i] = 1.0
    return b


@dataclass(frozen=True)
class AmbientFlatSpace:
    """The form, its cone test and the pairing on R^{dim+2}."""

    dim: int
    form: np.ndarray

    def pair(self, v, w) -> float:
        return float(np.asarray(v) @ self.form @ np.asarray(w))

    def cone_residual(self, x) -> float:
        return abs(self.pair(x, x))

    def on_cone(self, x, tol: float = CONE_TOL) -> bool:
        return self.cone_residual(x) <= tol


def ambient_space(dim: int) -> AmbientFlatSpace:
    if dim < 3:
        raise DimensionError("the sphere model needs dimension >= 3")
    return AmbientFlatSpace(dim, ambient_form(dim))


def standard_timelike_vector(dim: int) -> np.ndarray:
    v = np.zeros(dim + 2)
    v[0] = -1.0
    return v


def standard_null_vector(dim: int) -> np.ndarray:
    v = np.zeros(dim + 2)
    v[0], v[dim + 1] = -1.0, 1.0
    return v


def standard_spacelike_vector(dim: int) -> np.ndarray:
    v = np.zeros(dim + 2)
    v[dim + 1] = 1.0
    return v


def causal_type(dim: int, vec, tol: float = 1e-12) -> str:
    norm = ambient_space(dim).pair(vec, vec)
    if norm < -tol:
        return "timelike"
    if norm > tol:
        return "spacelike"
    return "null"


def _round_lift(xs):
    """The d+2 jet components of X(u) = (1, Y(u)) on the forward cone."""
    s = 1.0 + xs[0] * xs[0]
    for x in xs[1:]:
        s = s + x * x
    f = 1.0 / s
    one = 0.0 * xs[0] + 1.0
    return [one] + [2.0 * x * f for x in xs] + [2.0 * f - 1.0]


def _pair_round(vec, xs):
    """H(vec, X(u)) as a jet; linear in the lift components."""
    lift = _round_lift(xs)
    acc = -float(vec[0]) * lift[0]
    for a in range(1, len(vec)):
        if vec[a]:
            acc = acc + float(vec[a]) * lift[a]
    return acc


@dataclass(frozen=True)
class CapChart:
    """A hyperplane section of the forward cone with its induced chart."""

    vector: np.ndarray
    chart: MetricChart
    label: str

    @property
    def dim(self) -> int:
        return self.chart.dim

    def section_value(self, point) -> float:
        xs = coordinate_jets(self.dim, point, 0)
        return _pair_round(self.vector, xs).value

    def section_point(self, point) -> np.ndarray:
        """Ambient coordinates of the section over a chart point."""
        xs = coordinate_jets(self.dim, point, 0)
        den = _pair_round(self.vector, xs).value
        if den <= CONE_TOL:
            raise DomainError("point is outside the cap of the section")
        return np.array([x.value for x in _round_lift(xs)]) / den


def cap_chart(vector) -> CapChart:
    """Chart of the metric induced on the cone section H(I, X) = 1."""
    vec = np.asarray(vector, dtype=np.float64).copy()
    if vec.ndim != 1 or vec.size < 5:
        raise ArgumentError("ambient vector must have length d + 2 >= 5")
    if not vec.any():
        raise ArgumentError("the zero vector cuts no cone section")
    dim = vec.size - 2
    kind = causal_type(dim, vec)
    label = f"cap({kind},{np.round(vec, 6).tolist()})"

    def gen(xs):
        s = 1.0 + xs[0] * xs[0]
        for x in xs[1:]:
            s = s + x * x
        sig = _pair_round(vec, xs)
        if sig.value <= CONE_TOL:
            raise DomainError("point is outside the cap of the section")
        w = (2.0 / s) / sig
        w2 = w * w
        return [[w2 if a == b else 0.0 for b in range(dim)]
                for a in range(dim)]

    def domain(p):
        xs = coordinate_jets(dim, p, 0)
        return _pair_round(vec, xs).value > CONE_TOL

    return CapChart(vec, MetricChart(dim, gen, label, domain=domain), label)


def round_cap(dim: int) -> CapChart:
    return cap_chart(standard_timelike_vector(dim))


def flat_cap(dim: int) -> CapChart:
    return cap_chart(standard_null_vector(dim))


def hyperbolic_cap(dim: int) -> CapChart:
    return cap_chart(standard_spacelike_vector(dim))


def _resolve_base(dim: int, base) -> CapChart:
    if base is None:
        return round_cap(dim)
    if isinstance(base, CapChart):
        if base.dim != dim:
            raise ArgumentError("cap dimension does not match the vector")
        return base
    if isinstance(base, MetricChart):
        if base.dim != dim:
            raise ArgumentError("chart dimension does not match the vector")
        if not base.label.startswith("round_sphere_stereo") \
                or "r=1.0" not in base.label:
            raise ArgumentError(
                "only the unit round chart doubles as a section chart")
        cap = round_cap(dim)
        return CapChart(cap.vector, base, base.label)
    raise ArgumentError("base must be a CapChart or the unit round chart")


def model_ae(vector, base=None) -> AEStructure:
    """Almost-Einstein scale H(I, X) trivialized on a cap chart."""
    vec = np.asarray(vector, dtype=np.float64).copy()
    if vec.ndim != 1 or vec.size < 5:
        raise ArgumentError("ambient vector must have length d + 2 >= 5")
    if not vec.any():
        raise ArgumentError("the zero vector gives no scale")
    dim = vec.size - 2
    cap = _resolve_base(dim, base)
    kvec = cap.vector

    def gen(xs):
        return _pair_round(vec, xs) / _pair_round(kvec, xs)

    kind = causal_type(dim, vec)
    sig = ScalarField(dim, gen, 1, f"model({kind})")
    ae = ae_structure(cap.chart, sig, label=f"{kind} on {cap.label}")
    if np.array_equal(kvec, standard_null_vector(dim)):
        # on the flat cap the scale is the quadric
        # (last - first)/2 + middle . u - (first + last) |u|^2 / 2
        ae.quadric = (0.5 * (vec[-1] - vec[0]), vec[1:dim + 1].copy(),
                      -0.5 * (vec[0] + vec[-1]))
    return ae


def interpolate(vec1, vec2, t: float, base=None) -> AEStructure:
    """Scale of sin(t) I_1 + cos(t) I_2."""
    v1 = np.asarray(vec1, dtype=np.float64)
    v2 = np.asarray(vec2, dtype=np.float64)
    if v1.shape != v2.shape:
        raise ArgumentError("interpolation endpoints must share a dimension")
    if np.linalg.matrix_rank(np.stack([v1, v2]), tol=1e-12) < 2:
        raise ArgumentError("interpolation endpoints must be independent")
    return model_ae(np.sin(t) * v1 + np.cos(t) * v2, base)


def scale_zero_parameter(vec1, vec2, point, base=None) -> float:
    """A t in [0, pi) with sigma_t(point) = 0, located by bisection."""
    v1 = np.asarray(vec1, dtype=np.float64)
    v2 = np.asarray(vec2, dtype=np.float64)
    dim = v1.size - 2
    cap = _resolve_base(dim, base)
    xs = coordinate_jets(dim, point, 0)
    den = _pair_round(cap.vector, xs).value
    if den <= CONE_TOL:
        raise DomainError("point is outside the cap of the section")
    s1 = _pair_round(v1, xs).value / den
    s2 = _pair_round(v2, xs).value / den
    if s1 == 0.0 and s2 == 0.0:
        raise ArgumentError("both endpoint scales vanish at the point")

    def f(t):
        return np.sin(t) * s1 + np.cos(t) * s2

    grid = np.linspace(0.0, np.pi, 129)
    vals = [f(t) for t in grid]
    for k in range(128):
        if vals[k] == 0.0:
            return float(grid[k])
        if vals[k] * vals[k + 1] < 0.0:
            lo, hi = grid[k], grid[k + 1]
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                if f(lo) * f(mid) <= 0.0:
                    hi = mid
                else:
                    lo = mid
            return float(0.5 * (lo + hi))
    raise ArgumentError("no sign change found on [0, pi)")


# ---------------------------------------------------------------------------
# the ambient <-> tractor dictionary
# ---------------------------------------------------------------------------

def section_frame(cap: CapChart, point):
    """Section point, its coordinate derivatives and the dual null vector."""
    dim = cap.dim
    xs = coordinate_jets(dim, point, 1)
    sig = _pair_round(cap.vector, xs)
    if sig.value <= CONE_TOL:
        raise DomainError("point is outside the cap of the section")
    entries = [x / sig for x in _round_lift(xs)]
    x0 = np.array([e.value for e in entries])
    eye = np.eye(dim, dtype=int)
    frame = np.array([[e.derivative(tuple(eye[a])) for e in entries]
                      for a in range(dim)])
    h = ambient_form(dim)
    rows = np.vstack([x0 @ h, frame @ h])
    rhs = np.concatenate(([1.0], np.zeros(dim)))
    z0, *_ = np.linalg.lstsq(rows, rhs, rcond=None)
    z = z0 - 0.5 * float(z0 @ h @ z0) * x0
    return x0, frame, z


def ambient_from_packed(cap: CapChart, t: TractorValue) -> np.ndarray:
    """Constant-vector coordinates of a packed tractor at its point."""
    if t.tensor_slots or t.n_tractor != 1:
        raise ArgumentError("the dictionary expects a bare rank-1 tractor")
    x0, frame, z = section_frame(cap, t.point)
    h = ambient_form(cap.dim)
    g = frame @ h @ frame.T
    mu_up = np.linalg.solve(g, t.mu)
    return t.rho * x0 + t.sigma * z + mu_up @ frame


def packed_from_ambient(cap: CapChart, point, vector,
                        weight: int = 0) -> TractorValue:
    """Packed (sigma, mu_a, rho) of a constant ambient vector at a point."""
    vec = np.asarray(vector, dtype=np.float64)
    x0, frame, z = section_frame(cap, point)
    h = ambient_form(cap.dim)
    comp = np.concatenate((
        [vec @ h @ x0], frame @ h @ vec, [vec @ h @ z]))
    return TractorValue(cap.dim, np.asarray(point, dtype=np.float64),
                        cap.chart.label, cap.chart.metric_matrix(point),
                        weight, (), 1, comp)


def euler_homogeneity_residual(dim: int, point=None, order: int = 3) -> float:
    """Jet gap in X . grad Q = 2 Q for the ambient quadratic form."""
    n = dim + 2
    if point is None:
        point = 0.25 * np.arange(1.0, n + 1.0)
    xs = coordinate_jets(n, np.asarray(point, dtype=np.float64), order)
    h = ambient_form(dim)
    q = -xs[0] * xs[0]
    for a in range(1, n):
        q = q + xs[a] * xs[a]
    sp = jet_space(n, order)
    scaled = sum((xs[a] * Jet(n, order, jpartial(sp, q.coeffs, a))).coeffs
                 for a in range(n))
    ncut = jet_space(n, order - 1).ncoeff
    return float(np.max(np.abs(scaled[:ncut] - 2.0 * q.coeffs[:ncut])))


def ambient_correspondence_check(vector, base=None, n_points: int = 50,
                                 seed: int = 0, radius: float = 0.4) -> dict:
    """Residuals tying constant ambient vectors to parallel tractors.

    Keys: ``parallel`` (tractor derivative of the scale tractor),
    ``curvature`` (tractor curvature of the cap chart), ``reconstruction``
    (packed splitting reassembled into the ambient vector), ``metric``
    (tractor norm against the ambient form) and ``x_pairing``
    (h(X, I) = sigma).
    """
    vec = np.asarray(vector, dtype=np.float64)
    dim = vec.size - 2
    cap = _resolve_base(dim, base)
    ae = model_ae(vec, cap)
    h = ambient_form(dim)
    want = float(vec @ h @ vec)
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-radius, radius, size=(n_points, dim))
    out = {"parallel": 0.0, "curvature": 0.0, "reconstruction": 0.0,
           "metric": 0.0, "x_pairing": 0.0}
    for p in pts:
        out["parallel"] = max(out["parallel"], parallel_residual(ae, p))
        out["curvature"] = max(out["curvature"],
                               tractor_curvature(cap.chart, p).norm_inf)
        tr = splitting(cap.chart, p, ae.sigma)
        rebuilt = ambient_from_packed(cap, tr)
        out["reconstruction"] = max(out["reconstruction"],
                                    float(np.max(np.abs(rebuilt - vec))))
        out["metric"] = max(out["metric"],
                            abs(tractor_metric(tr, tr) - want))
        xval = TractorValue(dim, p, cap.chart.label,
                            cap.chart.metric_matrix(p), 1, (), 1,
                            np.eye(dim + 2)[dim + 1])
        out["x_pairing"] = max(out["x_pairing"],
                               abs(tractor_metric(xval, tr)
                                   - ae.sigma.value(p)))
    return out
