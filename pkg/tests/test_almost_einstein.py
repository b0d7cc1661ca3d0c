"""Almost-Einstein scales: residuals, classification, quadrics, covariance."""

import numpy as np
import pytest

from tractorcalc import charts
from tractorcalc.almost_einstein import (ae_residual, ae_structure,
                                         aesum_residuals, asc_scalar,
                                         classify, einstein_residual,
                                         ext_residual, parallel_residual,
                                         quadric_ae, yang_mills_residual)
from tractorcalc.charts import ScalarField, constant_scalar, scalar_from_coeffs
from tractorcalc.curvature import christoffel, riemann
from tractorcalc.errors import (ArgumentError, DimensionError,
                                NotAlmostEinsteinError, ScaleSingularityError)
from tractorcalc.tractor import splitting, tractor_metric

from oracles import central_diff, poly_eval, quadric_i_norm_sq, random_poly


def jet_poly(xs, table):
    total = 0.0
    for alpha, cf in table.items():
        term = cf
        for i, ai in enumerate(alpha):
            if ai:
                term = term * xs[i] ** ai
        total = total + term
    return total


def quadric_field(dim, a, b, c):
    b = np.asarray(b, dtype=np.float64)

    def gen(xs):
        e = a
        for i in range(dim):
            e = e + b[i] * xs[i] + c * xs[i] * xs[i]
        return e

    return ScalarField(dim, gen, weight=1, label="quadric")


def random_scale(dim, seed, degree=2, scale=0.5):
    rng = np.random.default_rng(seed)
    table = random_poly(rng, dim, degree, scale)
    table[(0,) * dim] = table.get((0,) * dim, 0.0) + 1.0
    return scalar_from_coeffs(dim, table, weight=1, label=f"s{seed}"), table


QUADRICS = [
    (0.5, np.zeros(3), 0.5),
    (0.5, np.zeros(3), -0.5),
    (0.0, np.zeros(4), 1.0),
    (0.4, np.array([0.3, -0.2, 0.1, 0.05]), -0.35),
    (0.0, np.array([1.0, 0.0, 0.0]), 0.0),
]


class TestAEResidual:
    """Trace-free part of grad grad s + s P as the defining residual."""

    @pytest.mark.parametrize("a,b,c", QUADRICS)
    def test_quadrics_solve_on_flat_charts(self, a, b, c):
        dim = len(b)
        ch = charts.euclidean(dim)
        sf = quadric_field(dim, a, b, c)
        rng = np.random.default_rng(7)
        for pt in rng.uniform(-0.8, 0.8, size=(10, dim)):
            assert ae_residual(ch, sf, pt).norm_inf() < 1e-12

    def test_unit_scale_on_einstein_product(self):
        ch = charts.product_spheres(2, 1.0, 2, 1.0)
        sf = constant_scalar(4, 1.0, weight=1)
        pt = np.array([0.12, -0.2, 0.15, 0.08])
        assert ae_residual(ch, sf, pt).norm_inf() < 1e-12

    def test_generic_scale_matches_direct_assembly(self):
        ch = charts.round_sphere_stereo(3)
        sf = ScalarField(3, lambda xs: xs[0], weight=1, label="x0")
        pt = np.array([0.2, -0.1, 0.15])
        res = ae_residual(ch, sf, pt)
        assert res.norm_inf() > 1e-2

        gam, = christoffel(ch, pt)
        pk = riemann(ch, pt)
        s0 = lambda q: float(q[0])
        eye = np.eye(3, dtype=int)
        grad = np.array([central_diff(s0, pt, tuple(eye[i]))
                         for i in range(3)])
        hess = np.array([[central_diff(s0, pt, tuple(eye[i] + eye[j]))
                          for j in range(3)] for i in range(3)])
        hess = hess - np.einsum("eab,e->ab", gam, grad)
        m = hess + float(pt[0]) * pk.schouten.components
        g = ch.metric_matrix(pt)
        m = m - g * np.trace(np.linalg.solve(g, m)) / 3.0
        assert np.max(np.abs(res.components - m)) < 2e-7

    def test_residual_is_trace_free(self):
        ch = charts.random_polynomial_perturbation(3, seed=5)
        sf, _ = random_scale(3, seed=11)
        pt = np.array([0.1, 0.05, -0.12])
        res = ae_residual(ch, sf, pt)
        assert res.slots == ("l", "l")
        assert res.weight == 1
        g = ch.metric_matrix(pt)
        assert abs(np.trace(np.linalg.solve(g, res.components))) < 1e-12

    def test_rejects_wrong_weight(self):
        ch = charts.euclidean(3)
        sf = constant_scalar(3, 1.0, weight=0)
        with pytest.raises(ArgumentError):
            ae_residual(ch, sf, np.zeros(3))


class TestASCScalar:
    """The almost-scalar-constant functional (2/d) s (J - Lap) s - |ds|^2."""

    def test_round_sphere_unit_scale(self):
        ch = charts.round_sphere_stereo(4)
        sf = constant_scalar(4, 1.0, weight=1)
        pt = np.array([0.2, -0.1, 0.05, 0.12])
        assert abs(asc_scalar(ch, sf, pt) - 1.0) < 1e-12

    def test_poincare_unit_scale(self):
        ch = charts.poincare_ball(4)
        sf = constant_scalar(4, 1.0, weight=1)
        pt = np.array([0.15, 0.1, -0.08, 0.05])
        assert abs(asc_scalar(ch, sf, pt) + 1.0) < 1e-12

    @pytest.mark.parametrize("a,b,c", QUADRICS)
    def test_quadric_closed_form(self, a, b, c):
        dim = len(b)
        ch = charts.euclidean(dim)
        sf = quadric_field(dim, a, b, c)
        rng = np.random.default_rng(3)
        want = -quadric_i_norm_sq(a, b, c)
        for pt in rng.uniform(-0.7, 0.7, size=(6, dim)):
            assert abs(asc_scalar(ch, sf, pt) - want) < 1e-11

    def test_equals_minus_scale_tractor_norm(self):
        ch = charts.random_polynomial_perturbation(3, seed=9)
        rng = np.random.default_rng(21)
        for seed in range(5):
            sf, _ = random_scale(3, seed=30 + seed)
            pt = rng.uniform(-0.2, 0.2, size=3)
            i = splitting(ch, pt, sf)
            assert abs(asc_scalar(ch, sf, pt) + tractor_metric(i, i)) < 1e-10


class TestQuadricConstruction:

    def test_records_coefficients_and_flat_chart(self):
        ae = quadric_ae(0.5, np.zeros(3), -0.5)
        assert ae.quadric is not None
        a, b, c = ae.quadric
        assert a == 0.5 and c == -0.5 and np.all(b == 0.0)
        assert np.allclose(ae.chart.metric_matrix(np.zeros(3)), np.eye(3))
        assert ae.samples.shape[1] == 3

    def test_rejects_degenerate_input(self):
        with pytest.raises(ArgumentError):
            quadric_ae(0.0, np.zeros(3), 0.0)
        with pytest.raises(ArgumentError):
            quadric_ae(1.0, np.zeros(2), 0.0)

    def test_structure_rejects_wrong_weight(self):
        ch = charts.euclidean(3)
        with pytest.raises(ArgumentError):
            ae_structure(ch, constant_scalar(3, 1.0, weight=0))


class TestParallelResidual:
    """Parallelism of the scale tractor detects almost-Einstein scales."""

    @pytest.mark.parametrize("a,b,c", QUADRICS)
    def test_quadrics_parallel_at_many_points(self, a, b, c):
        ae = quadric_ae(a, b, c)
        rng = np.random.default_rng(13)
        pts = rng.uniform(-0.9, 0.9, size=(100, len(b)))
        worst = max(parallel_residual(ae, pt) for pt in pts)
        assert worst < 1e-10

    @pytest.mark.parametrize("ch", [
        charts.round_sphere_stereo(3),
        charts.poincare_ball(4),
        charts.product_spheres(2, 1.0, 2, 1.0),
        charts.product_spheres(2, 1.0, 3, np.sqrt(2.0)),
    ])
    def test_unit_scale_on_einstein_charts(self, ch):
        ae = ae_structure(ch, constant_scalar(ch.dim, 1.0, weight=1),
                          radius=0.2)
        for pt in ae.samples:
            assert parallel_residual(ae, pt) < 1e-9

    def test_non_parallel_scale_is_loud(self):
        ch = charts.product_spheres(2, 1.0, 2, 1.0)
        sf = ScalarField(4, lambda xs: 1.0 + 0.1 * xs[0], weight=1)
        ae = ae_structure(ch, sf, radius=0.2)
        assert max(parallel_residual(ae, pt) for pt in ae.samples) > 1e-3

    def test_norm_constant_across_samples_when_parallel(self):
        ae = quadric_ae(0.4, np.array([0.3, -0.2, 0.1, 0.05]), -0.35, seed=3)
        vals = [tractor_metric(splitting(ae.chart, pt, ae.sigma),
                               splitting(ae.chart, pt, ae.sigma))
               for pt in ae.samples]
        assert np.var(vals) < 1e-10
        assert abs(np.mean(vals)
                   - quadric_i_norm_sq(*ae.quadric)) < 1e-10


class TestClassification:
    """Sign of |I|^2 puts a structure in the scalar-curvature trichotomy."""

    def test_round_case(self):
        rep = classify(quadric_ae(0.5, np.zeros(3), 0.5))
        assert rep.tag == "scalar_positive"
        assert abs(rep.i_norm_sq + 1.0) < 1e-12
        assert rep.locus == {"kind": "empty"}
        assert rep.max_parallel_residual < 1e-10

    def test_flat_case(self):
        rep = classify(quadric_ae(0.0, np.zeros(3), 1.0))
        assert rep.tag == "scalar_flat"
        assert abs(rep.i_norm_sq) < 1e-12
        assert rep.locus["kind"] == "point"
        assert np.allclose(rep.locus["center"], np.zeros(3))

    def test_hyperbolic_case(self):
        rep = classify(quadric_ae(0.5, np.zeros(3), -0.5))
        assert rep.tag == "scalar_negative"
        assert abs(rep.i_norm_sq - 1.0) < 1e-12
        assert rep.locus["kind"] == "sphere"
        assert np.allclose(rep.locus["center"], np.zeros(3))
        assert abs(rep.locus["radius"] - 1.0) < 1e-12

    def test_hyperplane_locus(self):
        rep = classify(quadric_ae(0.0, np.array([1.0, 0.0, 0.0]), 0.0))
        assert rep.tag == "scalar_negative"
        assert rep.locus["kind"] == "hyperplane"
        assert np.allclose(rep.locus["normal"], [1.0, 0.0, 0.0])
        assert abs(rep.locus["offset"]) < 1e-12

    def test_rejects_non_parallel_scale(self):
        ch = charts.product_spheres(2, 1.0, 2, 1.0)
        sf = ScalarField(4, lambda xs: 1.0 + 0.1 * xs[0], weight=1)
        ae = ae_structure(ch, sf, radius=0.2)
        with pytest.raises(NotAlmostEinsteinError):
            classify(ae)


class TestEinsteinResidual:
    """Off the zero locus, sigma^{-2} g is Einstein with Ric = -(d-1)|I|^2 g."""

    def test_hyperbolic_quadric(self):
        ae = quadric_ae(0.5, np.zeros(3), -0.5)
        for pt in ([0.3, 0.0, 0.0], [0.1, -0.2, 0.25], [0.0, 0.5, 0.0]):
            assert einstein_residual(ae, np.array(pt)) < 1e-9

    def test_scalar_flat_quadric(self):
        ae = quadric_ae(0.0, np.zeros(4), 1.0)
        assert einstein_residual(ae, np.array([1.0, 0.0, 0.0, 0.0])) < 1e-10

    def test_round_quadric(self):
        ae = quadric_ae(0.5, np.zeros(3), 0.5)
        assert einstein_residual(ae, np.array([0.2, 0.1, -0.3])) < 1e-9

    def test_unit_scale_on_product(self):
        ch = charts.product_spheres(2, 1.0, 2, 1.0)
        ae = ae_structure(ch, constant_scalar(4, 1.0, weight=1), radius=0.2)
        assert einstein_residual(ae, np.array([0.1, -0.05, 0.12, 0.2])) < 1e-9

    def test_guards_near_zero_locus(self):
        ae = quadric_ae(0.5, np.zeros(3), -0.5)
        with pytest.raises(ScaleSingularityError):
            einstein_residual(ae, np.array([0.9999, 0.0, 0.0]))


class TestScalarFlatCriticalPoint:
    """A scalar-flat scale vanishes to exactly first order at its locus."""

    def test_first_jet_dies_but_second_survives(self):
        ae = quadric_ae(0.0, np.zeros(3), 1.0)
        i0 = splitting(ae.chart, np.zeros(3), ae.sigma)
        sigma0, mu0, rho0 = i0.components[0], i0.components[1:4], \
            i0.components[4]
        assert abs(sigma0) < 1e-14
        assert np.max(np.abs(mu0)) < 1e-14
        assert abs(rho0 + 2.0) < 1e-12


class TestAesumResiduals:
    """Curvature contractions with n = grad sigma that vanish on AE scales."""

    @pytest.mark.parametrize("ch", [
        charts.product_spheres(2, 1.0, 2, 1.0),
        charts.product_spheres(2, 1.0, 3, np.sqrt(2.0)),
    ])
    def test_unit_scale_on_products(self, ch):
        ae = ae_structure(ch, constant_scalar(ch.dim, 1.0, weight=1),
                          radius=0.2)
        res = aesum_residuals(ae, ae.samples[0])
        assert set(res) == {"r1", "r2", "r3", "r4"}
        for key in ("r1", "r2", "r3", "r4"):
            assert np.max(np.abs(res[key])) < 1e-8

    def test_conformally_flat_quadric(self):
        ae = quadric_ae(0.4, np.array([0.3, -0.2, 0.1, 0.05]), -0.35)
        res = aesum_residuals(ae, np.array([0.2, -0.1, 0.3, 0.15]))
        for key in ("r1", "r2", "r3", "r4"):
            assert np.max(np.abs(res[key])) < 1e-13

    def test_detects_non_parallel_scale(self):
        ch = charts.product_spheres(2, 1.0, 2, 1.0)
        sf = ScalarField(4, lambda xs: 1.0 + 0.1 * xs[0], weight=1)
        ae = ae_structure(ch, sf, radius=0.2)
        res = aesum_residuals(ae, np.array([0.1, -0.2, 0.15, 0.05]))
        assert np.max(np.abs(res["r1"])) > 1e-4


class TestExtResidual:
    """Hooks of the scale tractor into W and its extended derivative."""

    def test_d5_einstein_product(self):
        ch = charts.product_spheres(2, 1.0, 3, np.sqrt(2.0))
        ae = ae_structure(ch, constant_scalar(5, 1.0, weight=1), radius=0.2)
        assert ext_residual(ae, np.array([0.1, -0.05, 0.12, 0.2, -0.08])) \
            < 1e-6

    def test_conformally_flat_d5(self):
        ae = quadric_ae(0.3, np.array([0.1, 0.0, -0.2, 0.05, 0.0]), -0.25)
        assert ext_residual(ae, np.array([0.2, 0.1, -0.15, 0.05, 0.3])) \
            < 1e-10

    def test_d3_reduces_to_weyl(self):
        ae = quadric_ae(0.5, np.zeros(3), -0.5)
        assert ext_residual(ae, np.array([0.2, -0.1, 0.3])) < 1e-12

    def test_d4_is_gated(self):
        ch = charts.product_spheres(2, 1.0, 2, 1.0)
        ae = ae_structure(ch, constant_scalar(4, 1.0, weight=1), radius=0.2)
        with pytest.raises(DimensionError):
            ext_residual(ae, np.zeros(4))


class TestYangMills:
    """d = 4 almost-Einstein charts have divergence-free tractor curvature."""

    def test_einstein_product_d4(self):
        ch = charts.product_spheres(2, 1.0, 2, 1.0)
        pt = np.array([0.12, -0.2, 0.15, 0.08])
        assert yang_mills_residual(ch, pt) < 1e-7

    def test_round_sphere_d4(self):
        ch = charts.round_sphere_stereo(4)
        pt = np.array([0.1, 0.05, -0.12, 0.2])
        assert yang_mills_residual(ch, pt) < 1e-7

    def test_generic_chart_is_not_yang_mills(self):
        ch = charts.random_polynomial_perturbation(4, seed=2)
        pt = np.array([0.12, -0.2, 0.15, 0.08])
        assert yang_mills_residual(ch, pt) > 1e-4


class TestConformalCovariance:
    """Residuals transform by scale weight; the functional S is invariant."""

    def test_ae_residual_and_asc_under_rescaling(self):
        ch = charts.random_polynomial_perturbation(3, seed=4)
        rng = np.random.default_rng(0)
        for trial in range(20):
            om_tb = {al: 0.3 * rng.uniform(-1, 1)
                     for al in np.ndindex(3, 3, 3) if 0 < sum(al) <= 2}
            s_tb = {al: rng.uniform(-1, 1)
                    for al in np.ndindex(3, 3, 3) if sum(al) <= 2}
            om = scalar_from_coeffs(3, om_tb, weight=0, label="om")
            sf = scalar_from_coeffs(3, s_tb, weight=1, label="s")
            hat = charts.conformal_rescale(ch, om)
            sf_hat = ScalarField(
                3, lambda xs: om.generator(xs).exp() * sf.generator(xs),
                weight=1, label="s hat")
            pt = rng.uniform(-0.2, 0.2, size=3)
            w0 = poly_eval(om_tb, pt)

            base = ae_residual(ch, sf, pt).components
            moved = ae_residual(hat, sf_hat, pt).components
            assert np.max(np.abs(moved - np.exp(w0) * base)) < 1e-9
            assert abs(asc_scalar(hat, sf_hat, pt)
                       - asc_scalar(ch, sf, pt)) < 1e-9

    def test_unit_scale_on_rescaled_product(self):
        ch = charts.product_spheres(2, 1.0, 2, 1.0)
        om = scalar_from_coeffs(
            4, {(1, 0, 0, 0): 0.2, (0, 0, 1, 1): -0.1}, weight=0, label="om")
        hat = charts.conformal_rescale(ch, om)
        sf_hat = ScalarField(4, lambda xs: om.generator(xs).exp(), weight=1)
        ae = ae_structure(hat, sf_hat, radius=0.2)
        pt = np.array([0.1, -0.05, 0.12, 0.2])
        assert parallel_residual(ae, pt) < 1e-9
        assert einstein_residual(ae, pt) < 1e-8


class TestLinearStructure:
    """Scales form a linear space; norms interpolate along combinations."""

    def test_combination_of_quadrics_stays_parallel(self):
        rng = np.random.default_rng(17)
        a1, b1, c1 = 0.4, np.array([0.3, -0.2, 0.1]), -0.35
        a2, b2, c2 = -0.1, np.array([0.05, 0.4, -0.25]), 0.2
        for trial in range(4):
            al, be = rng.uniform(-1.5, 1.5, size=2)
            sf = quadric_field(3, al * a1 + be * a2, al * b1 + be * b2,
                               al * c1 + be * c2)
            ae = ae_structure(charts.euclidean(3), sf, radius=0.6,
                              seed=trial)
            assert max(parallel_residual(ae, pt) for pt in ae.samples) \
                < 1e-10

    @pytest.mark.parametrize("t", [0.0, np.pi / 6, np.pi / 4, 1.0])
    def test_interpolated_norm(self, t):
        st, ct = np.sin(t), np.cos(t)
        sf = quadric_field(3, 0.5 * (st + ct), np.zeros(3),
                           0.5 * (ct - st))
        ae = ae_structure(charts.euclidean(3), sf)
        assert abs(ae.i_norm_sq + np.cos(2.0 * t)) < 1e-10

    def test_quarter_turn_is_scalar_flat(self):
        s = np.sin(np.pi / 4)
        sf = quadric_field(3, s, np.zeros(3), 0.0)
        rep = classify(ae_structure(charts.euclidean(3), sf))
        assert rep.tag == "scalar_flat"
