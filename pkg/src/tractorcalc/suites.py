"""Model catalog, point sampling, and the identity-check suites.

Each suite evaluates a family of curvature or tractor identities at sampled
points on built-in or configured models and reduces them to CheckReport
rows.  Runs are deterministic: every random stream is derived from the
config seed plus fixed indices, and report rows are sorted by check id so
identical configs produce byte-identical reports (wall times are recorded
only when timing is switched on).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace

import numpy as np

from .almost_einstein import (
    aesum_residuals,
    ae_structure,
    asc_scalar,
    classify,
    einstein_residual,
    parallel_residual,
    quadric_ae,
    yang_mills_residual,
)
from .charts import (
    MetricChart,
    ScalarField,
    conformal_rescale,
    constant_scalar,
    euclidean,
    fg_hyperbolic_normal_form,
    flat_boundary_schouten,
    poincare_ball,
    product_spheres,
    random_polynomial_perturbation,
    round_boundary_schouten,
    round_sphere_stereo,
    scalar_from_coeffs,
)
from .curvature import GeometryJets, bianchi_residuals, covariant_derivative, riemann
from .errors import ConfigError
from .hypersurface import (
    LevelSetHypersurface,
    check_I_equals_N,
    ellipsoid_level_set,
    minimal_scale,
    normal_and_mean_curvature,
    normal_tractor,
    project_orthogonal,
    restrict_tractor,
    second_fundamental_form,
    singularity_surface,
    sphere_level_set,
)
from .report import make_report
from .sphere_model import (
    cap_chart,
    flat_cap,
    hyperbolic_cap,
    interpolate,
    model_ae,
    round_cap,
    scale_zero_parameter,
    ambient_correspondence_check,
    standard_spacelike_vector,
    standard_timelike_vector,
)
from .tractor import (
    TractorValue,
    contract_tractor_slots,
    fD,
    splitting,
    splitting_field,
    tractor_connection,
    tractor_curvature,
    tractor_metric,
    transform_tractor,
    w_field,
    w_tractor,
)

SUITE_NAMES = (
    "bianchi",
    "conformal_invariance",
    "prolongation",
    "classification",
    "hypersurface",
    "aesum",
    "ext",
    "yangmills_d4",
    "sphere_model",
    "fg_normal_form",
    "negative_controls",
)

DEFAULT_TOLERANCES = {
    "bianchi.weyl_skew_gradient": 1e-9,
    "bianchi.weyl_divergence": 1e-9,
    "bianchi.schouten_divergence": 1e-9,
    "bianchi.cotton_divergence": 1e-9,
    "conformal.cotton_shift": 1e-9,
    "conformal.asc_invariance": 1e-9,
    "conformal.weyl_mixed": 1e-9,
    "conformal.tractor_metric": 1e-9,
    "conformal.connection": 1e-9,
    "conformal.normal_tractor": 1e-9,
    "conformal.restriction": 1e-9,
    "prolongation.parallel": 1e-10,
    "prolongation.norm_discriminant": 1e-10,
    "prolongation.asc_pairing": 1e-10,
    "classification.tags": 0.5,
    "classification.einstein_scale": 1e-8,
    "classification.flat_critical_point": 1e-8,
    "hypersurface.umbilic": 1e-9,
    "hypersurface.scale_normal": 1e-9,
    "hypersurface.minimal_mean": 1e-8,
    "hypersurface.minimal_ii": 1e-8,
    "hypersurface.unit_gradient": 1e-8,
    "aesum.sigma_cotton": 1e-8,
    "aesum.normal_cotton": 1e-8,
    "aesum.sigma_bach": 1e-8,
    "aesum.normal_bach": 1e-8,
    "aesum.bach_flat": 1e-8,
    "ext.w_hooks": 1e-9,
    "ext.w_derivative": 1e-6,
    "ext.x_hook": 1e-10,
    "yangmills.divergence": 1e-7,
    "yangmills.w_tractor": 1e-8,
    "sphere.basis_parallel": 1e-9,
    "sphere.cap_curvature": 1e-8,
    "sphere.interpolation_norm": 1e-10,
    "sphere.scale_roots": 1e-8,
    "sphere.correspondence": 1e-9,
    "fg.einstein": 1e-8,
    "control.non_parallel": 1e-4,
    "control.non_umbilic": 1e-4,
    "control.yang_mills": 1e-4,
    "control.tractor_curvature": 1e-4,
}

ANCHORS = {
    "bianchi.weyl_skew_gradient":
        "skew gradient of the Weyl tensor balances its Cotton source",
    "bianchi.weyl_divergence":
        "divergence of Weyl equals (d-3) times Cotton",
    "bianchi.schouten_divergence":
        "divergence of Schouten equals the gradient of its trace",
    "bianchi.cotton_divergence":
        "first-slot divergence of Cotton vanishes",
    "conformal.cotton_shift":
        "Cotton shifts by one Weyl contraction under rescaling",
    "conformal.asc_invariance":
        "almost-scalar-constant function is independent of the scale",
    "conformal.weyl_mixed":
        "mixed-variance Weyl is unchanged by rescaling",
    "conformal.tractor_metric":
        "tractor norm of a scale tractor is unchanged by rescaling",
    "conformal.connection":
        "tractor derivative commutes with the change-of-scale map",
    "conformal.normal_tractor":
        "normal tractor of a level set commutes with rescaling",
    "conformal.restriction":
        "restriction to the surface bundle commutes with rescaling",
    "prolongation.parallel":
        "splitting tractor of a quadric scale is parallel",
    "prolongation.norm_discriminant":
        "squared tractor norm equals the quadric discriminant",
    "prolongation.asc_pairing":
        "ASC function equals minus the squared tractor norm",
    "classification.tags":
        "sign of the squared norm sorts scales into three types",
    "classification.einstein_scale":
        "rescaled metric is Einstein away from the zero locus",
    "classification.flat_critical_point":
        "scalar-flat zero is critical with nonzero Laplacian",
    "hypersurface.umbilic":
        "zero locus of a scalar-negative scale is totally umbilic",
    "hypersurface.scale_normal":
        "scale tractor restricts to the normal tractor on the zero locus",
    "hypersurface.minimal_mean":
        "minimal companion scale removes the mean curvature",
    "hypersurface.minimal_ii":
        "minimal companion scale removes the second fundamental form",
    "hypersurface.unit_gradient":
        "scale gradient has unit length along the zero locus",
    "aesum.sigma_cotton":
        "scale times Cotton balances the normal Weyl contraction",
    "aesum.normal_cotton":
        "normal contraction of Cotton vanishes on Einstein scales",
    "aesum.sigma_bach":
        "scale times Bach balances the weighted Cotton contraction",
    "aesum.normal_bach":
        "normal contraction of Bach vanishes on Einstein scales",
    "aesum.bach_flat":
        "four-dimensional Einstein products are Bach flat",
    "ext.w_hooks":
        "parallel tractor contracts the W tractor to zero",
    "ext.w_derivative":
        "parallel tractor contracts the adjusted W derivative to zero",
    "ext.x_hook":
        "canonical tractor annihilates the first W slot",
    "yangmills.divergence":
        "tractor curvature is divergence free on Einstein four-manifolds",
    "yangmills.w_tractor":
        "W tractor vanishes on Einstein four-manifolds",
    "sphere.basis_parallel":
        "each coordinate ambient vector gives a parallel scale tractor",
    "sphere.cap_curvature":
        "cap metrics have the constant curvature of their vector type",
    "sphere.interpolation_norm":
        "interpolated norm traces minus cosine of the doubled angle",
    "sphere.scale_roots":
        "every cap point is a zero of some interpolated scale",
    "sphere.correspondence":
        "packed tractors of constant vectors rebuild the ambient data",
    "fg.einstein":
        "normal-form metric is Einstein with negative constant",
    "control.non_parallel":
        "generic polynomial scale is loudly non-parallel",
    "control.non_umbilic":
        "generic ellipsoid is loudly non-umbilic",
    "control.yang_mills":
        "generic perturbation chart is not Yang-Mills",
    "control.tractor_curvature":
        "generic perturbation chart has nonzero tractor curvature",
}

DEFAULT_CHARTS = (
    {"family": "polynomial_perturbation", "dim": 3, "seed": 11},
    {"family": "polynomial_perturbation", "dim": 4, "seed": 12},
    {"family": "polynomial_perturbation", "dim": 5, "seed": 13},
)

DEFAULT_AMBIENT_VECTOR = (0.2, 0.5, -0.3, 0.1, 0.7)

DEFAULT_T_VALUES = (0.0, np.pi / 6, np.pi / 4, np.pi / 3, 2.0)


# ---------------------------------------------------------------------------
# model catalog
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Family:
    """One buildable model family: signature, parameter schema, builder."""

    name: str
    kind: str
    signature: str
    required: tuple
    optional: tuple
    build: callable


def _build_fg(desc):
    dim = desc["dim"]
    if dim < 3:
        raise ConfigError("fg_hyperbolic_normal_form needs dim >= 3")
    radius = desc.get("radius", 1.0)
    if desc["boundary"] == "flat":
        return fg_hyperbolic_normal_form(euclidean(dim - 1),
                                         flat_boundary_schouten())
    if desc["boundary"] == "round":
        return fg_hyperbolic_normal_form(round_sphere_stereo(dim - 1, radius),
                                         round_boundary_schouten(radius))
    raise ConfigError(f"unknown boundary {desc['boundary']!r}")


def _build_polynomial_scale(desc):
    rng = np.random.default_rng(desc["seed"])
    dim = desc["dim"]
    degree = desc.get("degree", 3)
    table = {alpha: desc.get("magnitude", 0.2) * rng.uniform(-1.0, 1.0)
             for alpha in np.ndindex(*(degree + 1,) * dim)
             if 0 < sum(alpha) <= degree}
    table[(0,) * dim] = desc.get("offset", 2.0)
    return scalar_from_coeffs(dim, table, 1, "polynomial scale")


def _build_model_scale(desc):
    vec = np.asarray(desc["vector"], dtype=np.float64)
    base = {"round": round_cap, "flat": flat_cap,
            "hyperbolic": hyperbolic_cap}.get(desc.get("base", "round"))
    if base is None:
        raise ConfigError(f"unknown cap base {desc.get('base')!r}")
    return model_ae(vec, base(vec.size - 2))


CHART_FAMILIES = {
    f.name: f for f in (
        Family("euclidean", "chart", "euclidean(dim)",
               ("dim",), (), lambda d: euclidean(d["dim"])),
        Family("round_sphere_stereo", "chart",
               "round_sphere_stereo(dim,radius)", ("dim",), ("radius",),
               lambda d: round_sphere_stereo(d["dim"], d.get("radius", 1.0))),
        Family("poincare_ball", "chart", "poincare_ball(dim)",
               ("dim",), (), lambda d: poincare_ball(d["dim"])),
        Family("product_spheres", "chart", "product_spheres(d1,r1,d2,r2)",
               ("d1", "r1", "d2", "r2"), (),
               lambda d: product_spheres(d["d1"], d["r1"], d["d2"], d["r2"])),
        Family("polynomial_perturbation", "chart",
               "polynomial_perturbation(dim,seed,magnitude)",
               ("dim", "seed"), ("magnitude",),
               lambda d: random_polynomial_perturbation(
                   d["dim"], d["seed"],
                   magnitude=d.get("magnitude", 0.03))),
        Family("fg_hyperbolic_normal_form", "chart",
               "fg_hyperbolic_normal_form(boundary,dim,radius)",
               ("boundary", "dim"), ("radius",), _build_fg),
        Family("cap", "chart", "cap(vector)", ("vector",), (),
               lambda d: cap_chart(np.asarray(d["vector"], float)).chart),
    )
}

SCALE_FAMILIES = {
    f.name: f for f in (
        Family("quadric", "scale", "quadric(a,b,c)",
               ("a", "b", "c"), ("seed",),
               lambda d: quadric_ae(d["a"], np.asarray(d["b"], float),
                                    d["c"], seed=d.get("seed", 0))),
        Family("unit", "scale", "unit(dim,value)", ("dim",), ("value",),
               lambda d: constant_scalar(d["dim"], d.get("value", 1.0), 1)),
        Family("polynomial", "scale",
               "polynomial(dim,seed,degree,magnitude,offset)",
               ("dim", "seed"), ("degree", "magnitude", "offset"),
               _build_polynomial_scale),
        Family("model", "scale", "model(vector,base)",
               ("vector",), ("base",), _build_model_scale),
    )
}


def list_models() -> str:
    """Human-readable catalog of buildable chart and scale families."""
    lines = ["model families (chart metrics and scale fields):"]
    for group in (CHART_FAMILIES, SCALE_FAMILIES):
        for fam in group.values():
            opts = f"  optional: {', '.join(fam.optional)}" if fam.optional \
                else ""
            lines.append(f"  {fam.kind:5s}  {fam.signature:48s}"
                         f"required: {', '.join(fam.required)}{opts}")
    return "\n".join(lines)


def _validate_descriptor(desc, families, what: str) -> dict:
    if not isinstance(desc, dict):
        raise ConfigError(f"{what} descriptor must be an object")
    if "family" not in desc:
        raise ConfigError(f"{what} descriptor is missing a family name")
    name = desc["family"]
    if name not in families:
        raise ConfigError(f"unknown {what} family {name!r}")
    fam = families[name]
    keys = set(desc) - {"family"}
    missing = set(fam.required) - keys
    if missing:
        raise ConfigError(
            f"{what} family {name!r} is missing {sorted(missing)}")
    extra = keys - set(fam.required) - set(fam.optional)
    if extra:
        raise ConfigError(
            f"{what} family {name!r} does not take {sorted(extra)}")
    return dict(desc)


def build_chart(desc) -> MetricChart:
    desc = _validate_descriptor(desc, CHART_FAMILIES, "chart")
    return CHART_FAMILIES[desc["family"]].build(desc)


def build_scale(desc):
    desc = _validate_descriptor(desc, SCALE_FAMILIES, "scale")
    return SCALE_FAMILIES[desc["family"]].build(desc)


def _describe(desc) -> str:
    items = ",".join(f"{k}={desc[k]}" for k in sorted(desc) if k != "family")
    return f"{desc['family']}({items})"


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SuiteConfig:
    """Validated inputs for a verifier run."""

    suites: tuple = SUITE_NAMES
    seed: int = 0
    points: int = 8
    box: tuple = (-0.4, 0.4)
    tol_scale: float = 1.0
    tolerances: tuple = ()
    charts: tuple = DEFAULT_CHARTS
    scales: tuple = ()
    ambient_vector: tuple = DEFAULT_AMBIENT_VECTOR
    t_values: tuple = DEFAULT_T_VALUES
    n_quadrics: int = 6
    timing: bool = False

    def tolerance_for(self, check_id: str) -> float:
        table = dict(self.tolerances)
        base = table.get(check_id, DEFAULT_TOLERANCES[check_id])
        return base * self.tol_scale


_TOP_KEYS = {"suites", "seed", "points", "box", "tol_scale", "tolerances",
             "models", "timing"}
_MODEL_KEYS = {"charts", "scales", "ambient_vector", "t_values", "n_quadrics"}


def config_from_dict(raw: dict) -> SuiteConfig:
    """Validate a parsed JSON document into a SuiteConfig."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    cfg = SuiteConfig()

    if "suites" in raw:
        suites = tuple(raw["suites"])
        bad = [s for s in suites if s not in SUITE_NAMES]
        if bad or not suites:
            raise ConfigError(f"unknown suites {bad}" if bad
                              else "empty suite selection")
        cfg = replace(cfg, suites=suites)
    if "seed" in raw:
        seed = raw["seed"]
        if not isinstance(seed, int) or seed < 0:
            raise ConfigError("seed must be a nonnegative integer")
        cfg = replace(cfg, seed=seed)
    if "points" in raw:
        pts = raw["points"]
        if not isinstance(pts, int) or pts < 1:
            raise ConfigError("points must be a positive integer")
        cfg = replace(cfg, points=pts)
    if "box" in raw:
        box = tuple(raw["box"])
        if len(box) != 2 or not box[0] < box[1]:
            raise ConfigError("box must be [lo, hi] with lo < hi")
        cfg = replace(cfg, box=(float(box[0]), float(box[1])))
    if "tol_scale" in raw:
        ts = raw["tol_scale"]
        if not ts > 0:
            raise ConfigError("tol_scale must be positive")
        cfg = replace(cfg, tol_scale=float(ts))
    if "tolerances" in raw:
        table = raw["tolerances"]
        if not isinstance(table, dict):
            raise ConfigError("tolerances must be an object")
        for cid, tol in table.items():
            if cid not in DEFAULT_TOLERANCES:
                raise ConfigError(f"unknown check id {cid!r} in tolerances")
            if not tol > 0:
                raise ConfigError(f"tolerance for {cid} must be positive")
        cfg = replace(cfg, tolerances=tuple(sorted(
            (cid, float(tol)) for cid, tol in table.items())))
    if "models" in raw:
        models = raw["models"]
        if not isinstance(models, dict):
            raise ConfigError("models must be an object")
        unknown = set(models) - _MODEL_KEYS
        if unknown:
            raise ConfigError(f"unknown model keys {sorted(unknown)}")
        if "charts" in models:
            charts = tuple(_validate_descriptor(d, CHART_FAMILIES, "chart")
                           for d in models["charts"])
            if not charts:
                raise ConfigError("model charts must be nonempty")
            cfg = replace(cfg, charts=charts)
        if "scales" in models:
            cfg = replace(cfg, scales=tuple(
                _validate_descriptor(d, SCALE_FAMILIES, "scale")
                for d in models["scales"]))
        if "ambient_vector" in models:
            vec = tuple(float(v) for v in models["ambient_vector"])
            if len(vec) < 5 or not any(vec):
                raise ConfigError(
                    "ambient_vector must be a nonzero vector, length >= 5")
            cfg = replace(cfg, ambient_vector=vec)
        if "t_values" in models:
            ts = tuple(float(t) for t in models["t_values"])
            if not ts:
                raise ConfigError("t_values must be nonempty")
            cfg = replace(cfg, t_values=ts)
        if "n_quadrics" in models:
            n = models["n_quadrics"]
            if not isinstance(n, int) or n < 1:
                raise ConfigError("n_quadrics must be a positive integer")
            cfg = replace(cfg, n_quadrics=n)
    if "timing" in raw:
        if not isinstance(raw["timing"], bool):
            raise ConfigError("timing must be a boolean")
        cfg = replace(cfg, timing=raw["timing"])
    return cfg


def sample_points(chart: MetricChart, count: int, rng, box) -> np.ndarray:
    """Uniform samples from the box kept when inside the chart domain."""
    lo, hi = box
    out = []
    for _ in range(10 * count):
        p = rng.uniform(lo, hi, size=chart.dim)
        if chart.contains(p):
            out.append(p)
            if len(out) == count:
                return np.array(out)
    raise ConfigError(
        f"sampling box {box} misses the domain of {chart.label}")


class _Clock:
    """Per-check wall times, all zero unless timing was requested."""

    def __init__(self, enabled: bool):
        self.enabled = enabled
        self.mark = time.perf_counter()

    def lap(self) -> int:
        now = time.perf_counter()
        ms = int(round(1000.0 * (now - self.mark)))
        self.mark = now
        return ms if self.enabled else 0


# ---------------------------------------------------------------------------
# suites
# ---------------------------------------------------------------------------

def _random_table(rng, dim: int, degree: int, scale: float) -> dict:
    return {alpha: scale * rng.uniform(-1.0, 1.0)
            for alpha in np.ndindex(*(degree + 1,) * dim)
            if 0 < sum(alpha) <= degree}


def _omega(rng, dim: int) -> ScalarField:
    return scalar_from_coeffs(dim, _random_table(rng, dim, 2, 0.25), 0,
                              "omega")


def _suite_bianchi(cfg: SuiteConfig):
    clock = _Clock(cfg.timing)
    res = {key: [] for key in ("r1", "r2", "r3", "r4")}
    for k, desc in enumerate(cfg.charts):
        chart = build_chart(desc)
        rng = np.random.default_rng([cfg.seed, 0, k])
        for p in sample_points(chart, cfg.points, rng, cfg.box):
            out = bianchi_residuals(chart, p)
            for key in res:
                res[key].append(out[key])
    model = " | ".join(_describe(d) for d in cfg.charts)
    ids = {"r1": "bianchi.weyl_skew_gradient",
           "r2": "bianchi.weyl_divergence",
           "r3": "bianchi.schouten_divergence",
           "r4": "bianchi.cotton_divergence"}
    ms = clock.lap() // 4
    return [_report(cfg, ids[key], res[key], model, millis=ms)
            for key in ("r1", "r2", "r3", "r4")]


def _report(cfg, check_id, residuals, model, expect_fail=False, millis=0):
    return make_report(check_id, ANCHORS[check_id], residuals,
                       cfg.tolerance_for(check_id), model, cfg.seed,
                       expect_fail=expect_fail, millis=millis)


def _suite_conformal(cfg: SuiteConfig):
    clock = _Clock(cfg.timing)
    res = {cid: [] for cid in
           ("cotton_shift", "asc_invariance", "weyl_mixed", "tractor_metric",
            "connection", "normal_tractor", "restriction")}
    n_rescale = max(2, cfg.points // 4)

    for k, desc in enumerate(cfg.charts):
        chart = build_chart(desc)
        d = chart.dim
        rng = np.random.default_rng([cfg.seed, 1, k])
        sig_table = _random_table(rng, d, 2, 0.3)
        sig_table[(0,) * d] = 2.0
        sigma = scalar_from_coeffs(d, sig_table, 1, "sigma")
        for _ in range(n_rescale):
            om = _omega(rng, d)
            hat = conformal_rescale(chart, om)
            sigma_hat = ScalarField(
                d, lambda xs: om.generator(xs).exp() * sigma.generator(xs),
                1, "sigma hat")
            for p in sample_points(chart, 2, rng, cfg.box):
                pk, pkh = riemann(chart, p), riemann(hat, p)
                ups = covariant_derivative(om, chart, p).components
                w0 = om.value(p)
                upsu = pk.ginv.components @ ups
                shift = np.einsum("dabc,d->abc", pk.weyl.components, upsu)
                res["cotton_shift"].append(float(np.max(np.abs(
                    pkh.cotton.components - pk.cotton.components - shift))))
                res["weyl_mixed"].append(float(np.max(np.abs(
                    pkh.weyl_mixed.components - pk.weyl_mixed.components))))
                res["asc_invariance"].append(abs(
                    asc_scalar(hat, sigma_hat, p) - asc_scalar(chart, sigma, p)))
                ia = splitting(chart, p, sigma)
                ib = splitting(hat, p, sigma_hat)
                res["tractor_metric"].append(abs(
                    tractor_metric(ia, ia) - tractor_metric(ib, ib)))
                na = tractor_connection(splitting_field(chart, sigma),
                                        chart, p)
                nb = tractor_connection(splitting_field(hat, sigma_hat),
                                        hat, p)
                moved = transform_tractor(na, ups, omega_p=w0)
                res["connection"].append(float(np.max(np.abs(
                    moved.components - nb.components))))

    # normal tractor under rescaling, on a round-chart level set
    chart3 = round_sphere_stereo(3)
    surf = LevelSetHypersurface(chart3, sphere_level_set(3).phi)
    rng = np.random.default_rng([cfg.seed, 1, 97])
    for _ in range(n_rescale):
        om = _omega(rng, 3)
        hat = conformal_rescale(chart3, om)
        surf_hat = LevelSetHypersurface(hat, surf.phi)
        for _ in range(2):
            direction = rng.normal(size=3)
            p = surf.locate(direction / np.linalg.norm(direction))
            w0 = om.value(p)
            ups = covariant_derivative(om, chart3, p).components
            moved = transform_tractor(normal_tractor(surf, p), ups,
                                      omega_p=w0)
            res["normal_tractor"].append(float(np.max(np.abs(
                moved.components - normal_tractor(surf_hat, p).components))))

    # restriction onto the surface tractor bundle of the model quadric
    ae = quadric_ae(0.5, np.zeros(4), -0.5)
    qsurf = singularity_surface(ae)
    rng = np.random.default_rng([cfg.seed, 1, 98])
    for _ in range(n_rescale):
        direction = rng.normal(size=4)
        p = qsurf.locate(direction / np.linalg.norm(direction))
        g = ae.chart.metric_matrix(p)
        n, _ = normal_and_mean_curvature(qsurf, p)
        nup = np.linalg.solve(g, n.components)
        om = _omega(rng, 4)
        hat = conformal_rescale(ae.chart, om)
        surf_hat = LevelSetHypersurface(hat, qsurf.phi, qsurf.label,
                                        qsurf.quadratic, qsurf.embedding)
        w0 = om.value(p)
        ups = covariant_derivative(om, ae.chart, p).components
        ups_tan = ups - n.components * float(nup @ ups)
        t = TractorValue(4, p, ae.chart.label, g, 0, (), 1,
                         rng.normal(size=6))
        tperp = project_orthogonal(qsurf, t)
        base = restrict_tractor(qsurf, tperp)
        via_ambient = restrict_tractor(
            surf_hat, transform_tractor(tperp, ups, w0, new_scale=hat.label))
        via_surface = transform_tractor(base, ups_tan, w0,
                                        new_scale=via_ambient.scale)
        res["restriction"].append(float(np.max(np.abs(
            via_ambient.components - via_surface.components))))

    model = " | ".join(_describe(d) for d in cfg.charts)
    ms = clock.lap() // len(res)
    return [_report(cfg, f"conformal.{key}", vals, model, millis=ms)
            for key, vals in res.items()]


def _config_quadrics(cfg: SuiteConfig):
    """Configured quadric scales, topped up with seeded random ones."""
    out = [(build_scale(d), _describe(d)) for d in cfg.scales
           if d["family"] == "quadric"]
    rng = np.random.default_rng([cfg.seed, 2])
    while len(out) < cfg.n_quadrics:
        a, c = rng.uniform(-1.0, 1.0, size=2)
        b = rng.uniform(-1.0, 1.0, size=3)
        out.append((quadric_ae(a, b, c),
                    f"quadric(a={a:.3f},b=...,c={c:.3f})"))
    return out


def _suite_prolongation(cfg: SuiteConfig):
    clock = _Clock(cfg.timing)
    res = {"parallel": [], "norm_discriminant": [], "asc_pairing": []}
    names = []
    rng = np.random.default_rng([cfg.seed, 2, 1])
    for ae, name in _config_quadrics(cfg):
        names.append(name)
        a, b, c = ae.quadric
        disc = float(b @ b - 4.0 * a * c)
        for p in sample_points(ae.chart, cfg.points, rng, cfg.box):
            res["parallel"].append(parallel_residual(ae, p))
            i = splitting(ae.chart, p, ae.sigma)
            norm = tractor_metric(i, i)
            res["norm_discriminant"].append(abs(norm - disc))
            res["asc_pairing"].append(abs(
                asc_scalar(ae.chart, ae.sigma, p) + norm))
    model = f"{len(names)} quadric scales"
    ms = clock.lap() // 3
    return [_report(cfg, f"prolongation.{key}", vals, model, millis=ms)
            for key, vals in res.items()]


_STANDARD_QUADRICS = (
    (0.5, (0.0, 0.0, 0.0), 0.5, "scalar_positive"),
    (0.0, (0.0, 0.0, 0.0), 1.0, "scalar_flat"),
    (0.5, (0.0, 0.0, 0.0), -0.5, "scalar_negative"),
)


def _suite_classification(cfg: SuiteConfig):
    clock = _Clock(cfg.timing)
    tag_res, einstein_res = [], []
    rng = np.random.default_rng([cfg.seed, 3])
    for a, b, c, want in _STANDARD_QUADRICS:
        ae = quadric_ae(a, np.asarray(b), c)
        tag_res.append(0.0 if classify(ae).tag == want else 1.0)
        pts = [p for p in sample_points(ae.chart, 4 * cfg.points, rng,
                                        cfg.box)
               if abs(ae.sigma.value(p)) > 0.25][:cfg.points]
        pts.append(np.zeros(3) if want != "scalar_flat"
                   else np.full(3, 0.45))
        einstein_res.extend(einstein_residual(ae, p) for p in pts)

    # the scalar-flat scale has a critical zero with surviving Laplacian
    flat = quadric_ae(0.0, np.zeros(3), 1.0)
    origin = np.zeros(3)
    grad = covariant_derivative(flat.sigma, flat.chart, origin).components
    hess = covariant_derivative(flat.sigma, flat.chart, origin,
                                times=2).components
    lap = float(np.trace(np.linalg.solve(
        flat.chart.metric_matrix(origin), hess)))
    critical = [float(np.max(np.abs(grad))),
                0.0 if abs(lap) > 0.1 else 1.0]
    model = "quadric scales (0.5,0,0.5) (0,0,1) (0.5,0,-0.5)"
    ms = clock.lap() // 3
    return [
        _report(cfg, "classification.tags", tag_res, model, millis=ms),
        _report(cfg, "classification.einstein_scale", einstein_res, model,
                millis=ms),
        _report(cfg, "classification.flat_critical_point", critical, model,
                millis=ms),
    ]


def _surface_points(surface, count, rng, radius=1.0):
    pts = []
    for _ in range(count):
        direction = rng.normal(size=surface.chart.dim)
        pts.append(surface.locate(
            radius * direction / np.linalg.norm(direction)))
    return pts


def _suite_hypersurface(cfg: SuiteConfig):
    clock = _Clock(cfg.timing)
    ae = quadric_ae(0.5, np.zeros(3), -0.5)
    surf = singularity_surface(ae)
    hat = minimal_scale(surf)
    surf_hat = LevelSetHypersurface(hat, surf.phi)
    rng = np.random.default_rng([cfg.seed, 4])
    res = {"umbilic": [], "scale_normal": [], "minimal_mean": [],
           "minimal_ii": [], "unit_gradient": []}
    for p in _surface_points(surf, cfg.points, rng):
        res["umbilic"].append(second_fundamental_form(surf, p)[1])
        res["scale_normal"].append(check_I_equals_N(ae, p))
        _, mean = normal_and_mean_curvature(surf_hat, p)
        ii, _ = second_fundamental_form(surf_hat, p)
        res["minimal_mean"].append(abs(mean))
        res["minimal_ii"].append(float(np.max(np.abs(ii))))
        grad = covariant_derivative(ae.sigma, ae.chart, p).components
        ginv = np.linalg.inv(ae.chart.metric_matrix(p))
        res["unit_gradient"].append(abs(float(grad @ ginv @ grad) - 1.0))
    model = "singularity surface of quadric(0.5,0,-0.5)"
    ms = clock.lap() // len(res)
    return [_report(cfg, f"hypersurface.{key}", vals, model, millis=ms)
            for key, vals in res.items()]


def _suite_aesum(cfg: SuiteConfig):
    clock = _Clock(cfg.timing)
    chart = product_spheres(2, 1.0, 2, 1.0)
    ae = ae_structure(chart, constant_scalar(4, 1.0, 1))
    rng = np.random.default_rng([cfg.seed, 5])
    res = {"sigma_cotton": [], "normal_cotton": [], "sigma_bach": [],
           "normal_bach": [], "bach_flat": []}
    keys = {"r1": "sigma_cotton", "r2": "normal_cotton",
            "r3": "sigma_bach", "r4": "normal_bach"}
    for p in sample_points(chart, cfg.points, rng, cfg.box):
        out = aesum_residuals(ae, p)
        for src, dst in keys.items():
            res[dst].append(out[src])
        res["bach_flat"].append(riemann(chart, p).bach.norm_inf())
    model = "product_spheres(2,1.0,2,1.0), unit scale"
    ms = clock.lap() // len(res)
    return [_report(cfg, f"aesum.{key}", vals, model, millis=ms)
            for key, vals in res.items()]


def _suite_ext(cfg: SuiteConfig):
    clock = _Clock(cfg.timing)
    chart = product_spheres(2, 1.0, 3, np.sqrt(2.0))
    sigma = constant_scalar(5, 1.0, 1)
    rng = np.random.default_rng([cfg.seed, 6])
    pts = sample_points(chart, min(cfg.points, 3), rng, cfg.box)
    hooks, xhooks = [], []
    for p in pts:
        i = splitting(chart, p, sigma)
        w = w_tractor(chart, p)
        hooks.append(max(contract_tractor_slots(i, w, slot_s=0).norm_inf,
                         contract_tractor_slots(i, w, slot_s=3).norm_inf))
        x = TractorValue(5, p, chart.label, chart.metric_matrix(p), 1, (), 1,
                         np.eye(7)[6])
        xhooks.append(contract_tractor_slots(x, w, slot_s=0).norm_inf)
    ms_hooks = clock.lap() // 2
    p = pts[0]
    i = splitting(chart, p, sigma)
    der = fD(w_field(chart), chart, p)
    deriv = [contract_tractor_slots(i, der, slot_s=0).norm_inf]
    model = "product_spheres(2,1.0,3,1.414...), unit scale"
    return [
        _report(cfg, "ext.w_hooks", hooks, model, millis=ms_hooks),
        _report(cfg, "ext.x_hook", xhooks, model, millis=ms_hooks),
        _report(cfg, "ext.w_derivative", deriv, model, millis=clock.lap()),
    ]


def _suite_yangmills(cfg: SuiteConfig):
    clock = _Clock(cfg.timing)
    chart = product_spheres(2, 1.0, 2, 1.0)
    rng = np.random.default_rng([cfg.seed, 7])
    div, wt = [], []
    for p in sample_points(chart, min(cfg.points, 6), rng, cfg.box):
        div.append(yang_mills_residual(chart, p))
        wt.append(w_tractor(chart, p).norm_inf)
    model = "product_spheres(2,1.0,2,1.0)"
    ms = clock.lap() // 2
    return [
        _report(cfg, "yangmills.divergence", div, model, millis=ms),
        _report(cfg, "yangmills.w_tractor", wt, model, millis=ms),
    ]


def _suite_sphere_model(cfg: SuiteConfig):
    clock = _Clock(cfg.timing)
    vec = np.asarray(cfg.ambient_vector, dtype=np.float64)
    d = vec.size - 2
    rng = np.random.default_rng([cfg.seed, 8])
    caps = (round_cap(d), flat_cap(d), hyperbolic_cap(d))

    basis = []
    cap0 = caps[0]
    pts = rng.uniform(-0.3, 0.3, size=(min(cfg.points, 4), d))
    for k in range(d + 2):
        ae = model_ae(np.eye(d + 2)[k], cap0)
        basis.extend(parallel_residual(ae, p) for p in pts)

    curvature = []
    for cap, k in zip(caps, (1.0, 0.0, -1.0)):
        for p in rng.uniform(-0.35, 0.35, size=(3, d)):
            pk = riemann(cap.chart, p)
            g = pk.g.components
            wedge = np.einsum("ac,bd->abcd", g, g) \
                - np.einsum("ad,bc->abcd", g, g)
            curvature.append(float(np.max(np.abs(
                pk.riemann.components - k * wedge))))

    i1 = standard_spacelike_vector(d)
    i2 = standard_timelike_vector(d)
    interp = [abs(interpolate(i1, i2, t, caps[1]).i_norm_sq + np.cos(2 * t))
              for t in cfg.t_values]

    roots = []
    for p in rng.uniform(-0.9, 0.9, size=(cfg.points, d)):
        t = scale_zero_parameter(i1, i2, p, caps[1])
        roots.append(abs(interpolate(i1, i2, t, caps[1]).sigma.value(p)))

    corr = []
    for k, cap in enumerate(caps):
        out = ambient_correspondence_check(vec, cap, n_points=cfg.points,
                                           seed=cfg.seed + k)
        corr.append(max(out.values()))

    model = f"null-cone caps, ambient vector {np.round(vec, 4).tolist()}"
    ms = clock.lap() // 5
    return [
        _report(cfg, "sphere.basis_parallel", basis, model, millis=ms),
        _report(cfg, "sphere.cap_curvature", curvature, model, millis=ms),
        _report(cfg, "sphere.interpolation_norm", interp, model, millis=ms),
        _report(cfg, "sphere.scale_roots", roots, model, millis=ms),
        _report(cfg, "sphere.correspondence", corr, model, millis=ms),
    ]


def _suite_fg(cfg: SuiteConfig):
    clock = _Clock(cfg.timing)
    rng = np.random.default_rng([cfg.seed, 9])
    res = []
    names = []
    for m in (2, 3, 4):
        d = m + 1
        pairs = (
            ("flat", fg_hyperbolic_normal_form(euclidean(m),
                                               flat_boundary_schouten())),
            ("round", fg_hyperbolic_normal_form(round_sphere_stereo(m),
                                                round_boundary_schouten())),
        )
        for name, chart in pairs:
            names.append(f"{name} d={d}")
            for _ in range(cfg.points):
                p = np.append(rng.uniform(cfg.box[0], cfg.box[1], size=m),
                              rng.uniform(0.1, 1.0))
                geo = GeometryJets(chart, p, order=2)
                ric = geo.value(geo.ricci)
                g = geo.value(geo.g)
                res.append(float(np.max(np.abs(ric + (d - 1) * g))))
    model = "fg_hyperbolic_normal_form over " + ", ".join(names)
    return [_report(cfg, "fg.einstein", res, model, millis=clock.lap())]


def _suite_controls(cfg: SuiteConfig):
    clock = _Clock(cfg.timing)
    rng = np.random.default_rng([cfg.seed, 10])

    bad_scale = _build_polynomial_scale(
        {"dim": 3, "seed": cfg.seed + 23, "degree": 3, "magnitude": 0.4})
    bad_ae = ae_structure(euclidean(3), bad_scale)
    non_parallel = [parallel_residual(bad_ae, p)
                    for p in sample_points(bad_ae.chart, cfg.points, rng,
                                           cfg.box)]

    ellipsoid = ellipsoid_level_set((1.0, 1.3, 0.8))
    non_umbilic = []
    for _ in range(cfg.points):
        direction = rng.normal(size=3)
        p = ellipsoid.locate(direction / np.linalg.norm(direction))
        non_umbilic.append(second_fundamental_form(ellipsoid, p)[1])

    chart4 = random_polynomial_perturbation(4, seed=cfg.seed + 29,
                                            magnitude=0.05)
    pts4 = sample_points(chart4, max(2, cfg.points // 2), rng, cfg.box)
    ym = [yang_mills_residual(chart4, p) for p in pts4]
    omega = [tractor_curvature(chart4, p).norm_inf for p in pts4]

    ms = clock.lap() // 4
    return [
        _report(cfg, "control.non_parallel", non_parallel,
                "cubic polynomial scale on euclidean(3)", expect_fail=True,
                millis=ms),
        _report(cfg, "control.non_umbilic", non_umbilic,
                "ellipsoid(1.0,1.3,0.8)", expect_fail=True, millis=ms),
        _report(cfg, "control.yang_mills", ym,
                _describe({"family": "polynomial_perturbation", "dim": 4,
                           "seed": cfg.seed + 29}), expect_fail=True,
                millis=ms),
        _report(cfg, "control.tractor_curvature", omega,
                _describe({"family": "polynomial_perturbation", "dim": 4,
                           "seed": cfg.seed + 29}), expect_fail=True,
                millis=ms),
    ]


SUITES = {
    "bianchi": _suite_bianchi,
    "conformal_invariance": _suite_conformal,
    "prolongation": _suite_prolongation,
    "classification": _suite_classification,
    "hypersurface": _suite_hypersurface,
    "aesum": _suite_aesum,
    "ext": _suite_ext,
    "yangmills_d4": _suite_yangmills,
    "sphere_model": _suite_sphere_model,
    "fg_normal_form": _suite_fg,
    "negative_controls": _suite_controls,
}


def run(cfg: SuiteConfig):
    """Run the selected suites; returns (reports sorted by id, exit code)."""
    reports = []
    for name in SUITE_NAMES:
        if name in cfg.suites:
            reports.extend(SUITES[name](cfg))
    reports.sort(key=lambda r: r.id)
    return reports, (0 if all(r.ok for r in reports) else 1)
