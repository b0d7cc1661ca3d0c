"""Tractor calculus: transformation law, metric, connection, curvature, W."""

import numpy as np
import pytest

from tractorcalc import charts, curvature
from tractorcalc.charts import ScalarField
from tractorcalc.errors import (ArgumentError, DimensionError,
                                ScaleMismatchError)
from tractorcalc.tractor import (TractorField, TractorValue, box_w,
                                 bundle_metric, contract_tractor_slots, fD,
                                 hash_apply, pairing_matrix, projectors,
                                 splitting, splitting_field, tractor_D,
                                 tractor_connection, tractor_curvature,
                                 tractor_curvature_divergence, tractor_metric,
                                 transform_tractor, w_field, w_tractor)

from oracles import central_diff, poly_diff, poly_eval, quadric_i_norm_sq, \
    random_poly


def scaled_tol(arr, k):
    return (1.0 + float(np.max(np.abs(arr)))) * 10.0 ** (-k)


def jet_poly(xs, table):
    total = 0.0
    for alpha, cf in table.items():
        term = cf
        for i, ai in enumerate(alpha):
            if ai:
                term = term * xs[i] ** ai
        total = total + term
    return total


def random_tractor_field(dim, weight, seed, degree=2, scale=0.4):
    rng = np.random.default_rng(seed)
    tables = [random_poly(rng, dim, degree, scale) for _ in range(dim + 2)]
    fld = TractorField(dim, weight,
                       lambda xs: [jet_poly(xs, tb) for tb in tables],
                       label=f"rand{seed}")
    return fld, tables


def bare_value(chart, point, comp, weight=0):
    ref = projectors(chart, point)["X"]
    comp = np.asarray(comp, dtype=np.float64)
    return TractorValue(chart.dim, ref.point, ref.scale, ref.metric, weight,
                        (), comp.ndim, comp)


def quadric_field(dim, a, b, c):
    b = np.asarray(b, dtype=np.float64)

    def gen(xs):
        e = a
        for i in range(dim):
            e = e + b[i] * xs[i] + c * xs[i] * xs[i]
        return e

    return ScalarField(dim, gen, weight=1, label=f"quadric({a},{c})")


class TestTransform:
    def test_zero_upsilon_is_identity(self):
        ch = charts.euclidean(3)
        t = bare_value(ch, [0.1, 0.2, -0.3], [0.5, 1.0, -2.0, 0.25, 3.0],
                       weight=1)
        out = transform_tractor(t, np.zeros(3))
        np.testing.assert_array_equal(out.components, t.components)

    def test_flat_unit_triple(self):
        ch = charts.euclidean(3)
        t = bare_value(ch, [0.0, 0.0, 0.0], [1.0, 0.0, 0.0, 0.0, 0.0])
        out = transform_tractor(t, [1.0, 0.0, 0.0])
        np.testing.assert_allclose(out.components,
                                   [1.0, 1.0, 0.0, 0.0, -0.5], atol=1e-15)

    def test_zero_sigma_slot_is_invariant(self):
        # (0, mu, rho) -> (0, mu, rho - Ups.mu): top and middle slots frozen,
        # which is what makes sigma = h(X, I) scale-independent
        ch = charts.euclidean(3)
        mu = np.array([0.7, -0.3, 0.2])
        ups = np.array([0.4, 0.1, -0.6])
        t = bare_value(ch, [0.0, 0.0, 0.0], [0.0, *mu, 1.3])
        out = transform_tractor(t, ups)
        np.testing.assert_allclose(out.components[0], 0.0, atol=1e-15)
        np.testing.assert_allclose(out.components[1:4], mu, atol=1e-15)
        assert out.components[4] == pytest.approx(1.3 - ups @ mu, abs=1e-14)

    def test_round_trip_restores_triple(self):
        ch = charts.poincare_ball(3)
        p = np.array([0.2, -0.1, 0.3])
        ups = np.array([0.3, -0.2, 0.5])
        for weight, comp in ((1, np.array([0.5, 1.0, -2.0, 0.25, 3.0])),
                             (-2, np.arange(25.0).reshape(5, 5))):
            t = bare_value(ch, p, comp, weight=weight)
            fwd = transform_tractor(t, ups, omega_p=0.4)
            back = transform_tractor(fwd, -ups, omega_p=-0.4,
                                     new_scale=t.scale)
            assert np.max(np.abs(back.components - t.components)) < 1e-12
            np.testing.assert_allclose(back.metric, t.metric, atol=1e-14)

    def test_accepts_one_form_value(self):
        ch = charts.poincare_ball(2)
        p = np.array([0.1, -0.2])
        om = ScalarField(2, lambda xs: 0.3 * xs[0] - 0.2 * xs[1], weight=0)
        ups = curvature.covariant_derivative(om, ch, p)
        t = bare_value(ch, p, [1.0, 0.2, -0.1, 0.5])
        a = transform_tractor(t, ups)
        b = transform_tractor(t, ups.components)
        np.testing.assert_array_equal(a.components, b.components)

    def test_upsilon_validation(self):
        ch = charts.euclidean(3)
        t = bare_value(ch, [0.0, 0.0, 0.0], np.ones(5))
        with pytest.raises(ArgumentError):
            transform_tractor(t, np.zeros(2))


class TestTractorMetric:
    def test_x_is_null(self):
        pr = projectors(charts.poincare_ball(3), [0.2, 0.1, -0.3])
        assert tractor_metric(pr["X"], pr["X"]) == 0.0

    def test_quadric_scale_has_unit_norm(self):
        ch = charts.euclidean(3)
        sigma = quadric_field(3, 0.5, [0.0, 0.0, 0.0], -0.5)
        for p in ([0.0, 0.0, 0.0], [0.3, -0.5, 0.2], [0.8, 0.1, -0.4]):
            i = splitting(ch, p, sigma)
            assert tractor_metric(i, i) == pytest.approx(1.0, abs=1e-12)

    def test_invariant_under_scale_change(self):
        ch = charts.random_polynomial_perturbation(4, seed=3)
        p = np.array([0.1, 0.2, -0.1, 0.15])
        rng = np.random.default_rng(5)
        t1 = bare_value(ch, p, rng.normal(size=6), weight=0)
        t2 = t1.replace_components(rng.normal(size=6))
        before = tractor_metric(t1, t2)
        ups = rng.normal(scale=0.5, size=4)
        for om in (0.0, 0.7):
            s1 = transform_tractor(t1, ups, omega_p=om, new_scale="hat")
            s2 = transform_tractor(t2, ups, omega_p=om, new_scale="hat")
            assert abs(tractor_metric(s1, s2) - before) < 1e-12

    def test_lorentzian_signature(self):
        h = bundle_metric(charts.product_spheres(2, 1.0, 3, 1.0),
                          [0.1, -0.2, 0.15, 0.05, -0.1])
        ev = np.linalg.eigvalsh(h.components)
        assert int(np.sum(ev > 0)) == 6 and int(np.sum(ev < 0)) == 1

    def test_scale_mismatch_rejected(self):
        p = [0.1, 0.2, -0.3]
        a = projectors(charts.euclidean(3), p)["X"]
        b = projectors(charts.poincare_ball(3), p)["X"]
        with pytest.raises(ScaleMismatchError):
            tractor_metric(a, b)
        c = transform_tractor(a, np.zeros(3), omega_p=0.2)
        with pytest.raises(ScaleMismatchError):
            tractor_metric(a, c)

    def test_needs_bare_rank_one(self):
        ch = charts.euclidean(2)
        p = [0.0, 0.0]
        with pytest.raises(ArgumentError):
            tractor_metric(bundle_metric(ch, p), projectors(ch, p)["X"])


class TestProjectors:
    def test_contraction_table(self):
        ch = charts.poincare_ball(3)
        p = [0.2, -0.1, 0.3]
        pr = projectors(ch, p)
        x, y, z = pr["X"], pr["Y"], pr["Z"]
        assert tractor_metric(y, x) == 1.0
        assert tractor_metric(x, x) == 0.0
        assert tractor_metric(y, y) == 0.0
        assert contract_tractor_slots(x, z).norm_inf() == 0.0
        assert contract_tractor_slots(y, z).norm_inf() == 0.0
        zz = contract_tractor_slots(z, z)
        np.testing.assert_allclose(zz.components, np.linalg.inv(x.metric),
                                   atol=1e-13)

    def test_x_reads_off_sigma(self):
        ch = charts.random_polynomial_perturbation(3, seed=11)
        p = [0.15, -0.2, 0.1]
        x = projectors(ch, p)["X"]
        assert x.weight == 1
        v = bare_value(ch, p, [0.8, 0.1, -0.4, 0.2, 1.5], weight=0)
        assert tractor_metric(x, v) == pytest.approx(v.sigma, abs=1e-15)

    def test_nabla_x_is_z(self):
        ch = charts.poincare_ball(3)
        p = np.array([0.2, -0.1, 0.3])
        xf = TractorField(3, 1, lambda xs: [0.0, 0.0, 0.0, 0.0, 1.0],
                          label="X")
        conn = tractor_connection(xf, ch, p)
        g = curvature.riemann(ch, p).g.components
        np.testing.assert_allclose(conn.components[:, 0], 0.0, atol=1e-14)
        np.testing.assert_allclose(conn.components[:, 4], 0.0, atol=1e-14)
        np.testing.assert_allclose(conn.components[:, 1:4], g, atol=1e-12)

    def test_nabla_z_lowered_identity(self):
        # grad_a Z_Ab = -P_ab X_A - Y_A g_ab on the metric-lowered injector
        ch = charts.poincare_ball(3)
        p = np.array([0.1, 0.25, -0.2])

        def gen(xs):
            g = ch.generator(xs)
            return [[0.0] + [g[c][b] for c in range(3)] + [0.0]
                    for b in range(3)]

        zf = TractorField(3, 1, gen, tensor_slots=("l",), label="Z")
        conn = tractor_connection(zf, ch, p)
        pk = curvature.riemann(ch, p)
        g, schouten = pk.g.components, pk.schouten.components
        np.testing.assert_allclose(conn.components[:, :, 0], -g, atol=1e-12)
        np.testing.assert_allclose(conn.components[:, :, 4], -schouten,
                                   atol=1e-12)
        assert np.max(np.abs(conn.components[:, :, 1:4])) < 1e-12


class TestTractorConnection:
    def test_quadric_scale_is_parallel_flat(self):
        ch = charts.euclidean(3)
        sigma = quadric_field(3, 0.5, [0.0, 0.0, 0.0], -0.5)
        for p in ([0.1, -0.3, 0.2], [0.6, 0.2, -0.5]):
            conn = tractor_connection(splitting_field(ch, sigma), ch, p)
            assert conn.norm_inf < 1e-13

    def test_einstein_unit_scale_is_parallel(self):
        ch = charts.poincare_ball(3)
        one = ScalarField(3, lambda xs: 1.0 + 0.0 * xs[0], weight=1)
        conn = tractor_connection(splitting_field(ch, one), ch,
                                  [0.2, -0.1, 0.3])
        assert conn.norm_inf < 1e-12

    def test_slot_formulas_against_finite_differences(self):
        ch = charts.poincare_ball(3)
        p = np.array([0.15, -0.2, 0.1])
        fld, tables = random_tractor_field(3, 0, seed=23)
        conn = tractor_connection(fld, ch, p)

        pk = curvature.riemann(ch, p)
        gam, g = pk.gamma, pk.g.components
        schouten = pk.schouten.components
        pmix = np.linalg.inv(g) @ schouten
        vals = np.array([poly_eval(tb, p) for tb in tables])
        grads = np.array([[central_diff(lambda q: poly_eval(tb, q), p,
                                        tuple(1 if k == a else 0
                                              for k in range(3)))
                           for tb in tables] for a in range(3)])
        sig, mu, rho = vals[0], vals[1:4], vals[4]
        want = np.empty((3, 5))
        want[:, 0] = grads[:, 0] - mu
        want[:, 1:4] = grads[:, 1:4] - np.einsum("eab,e->ab", gam, mu) \
            + g * rho + schouten * sig
        want[:, 4] = grads[:, 4] - pmix @ mu
        np.testing.assert_allclose(conn.components, want, rtol=1e-6,
                                   atol=1e-6)

    def test_second_derivative_shape_and_validation(self):
        ch = charts.euclidean(3)
        fld, _ = random_tractor_field(3, 0, seed=4)
        dd = tractor_connection(fld, ch, [0.1, -0.2, 0.3], times=2)
        assert dd.tensor_slots == ("l", "l")
        assert dd.components.shape == (3, 3, 5)
        with pytest.raises(ArgumentError):
            tractor_connection(fld, ch, [0.1, -0.2, 0.3], times=3)


class TestTractorD:
    def test_quadric_scale_worked_example(self):
        ch = charts.euclidean(3)
        sigma = quadric_field(3, 0.5, [0.0, 0.0, 0.0], -0.5)
        p = np.array([0.3, -0.5, 0.2])
        i = splitting(ch, p, sigma)
        want = np.array([0.5 * (1.0 - p @ p), *(-p), 1.0])
        np.testing.assert_allclose(i.components, want, atol=1e-13)
        dop = tractor_D(sigma, ch, p)
        np.testing.assert_allclose(dop.components, 3.0 * want, atol=1e-13)
        assert i.weight == 0 and dop.weight == 0

    def test_x_inverts_the_splitting(self):
        ch = charts.random_polynomial_perturbation(3, seed=9)
        rng = np.random.default_rng(31)
        table = random_poly(rng, 3, 3, scale=0.5)
        sigma = charts.scalar_from_coeffs(3, table, 1, "sigma")
        for _ in range(20):
            p = rng.uniform(-0.3, 0.3, size=3)
            i = splitting(ch, p, sigma)
            x = projectors(ch, p)["X"]
            assert tractor_metric(x, i) == pytest.approx(
                poly_eval(table, p), abs=1e-11)

    def test_degenerate_weight_keeps_only_x_slot(self):
        # d + 2w - 2 = 0 at d=4, w=-1 leaves X_A (Delta - wJ) V
        ch = charts.random_polynomial_perturbation(4, seed=13)
        p = np.array([0.1, -0.2, 0.15, 0.05])
        fld = ScalarField(4, lambda xs: xs[0] ** 2 - xs[1] * xs[3] + xs[2],
                          weight=-1)
        dop = tractor_D(fld, ch, p)
        assert np.max(np.abs(dop.components[:5])) == 0.0
        pk = curvature.riemann(ch, p)
        dd = curvature.covariant_derivative(fld, ch, p, times=2).components
        ginv = np.linalg.inv(pk.g.components)
        lap = -float(np.einsum("ab,ab->", ginv, dd))
        val = p[0] ** 2 - p[1] * p[3] + p[2]
        want = lap + float(pk.jcal.components) * val
        assert dop.components[5] == pytest.approx(want, abs=1e-9)


class TestTractorCurvature:
    def test_commutator_oracle(self):
        ch = charts.random_polynomial_perturbation(4, seed=17)
        p = np.array([0.1, -0.15, 0.2, 0.05])
        om = tractor_curvature(ch, p)
        jm = pairing_matrix(om.metric)
        for seed in (41, 42):
            fld, _ = random_tractor_field(4, 0, seed=seed)
            v = fld.jets(p, 0)[..., 0]
            dd = tractor_connection(fld, ch, p, times=2).components
            comm = dd - dd.transpose(1, 0, 2)
            want = np.einsum("abCE,EF,F->abC", om.components, jm, v)
            assert np.max(np.abs(comm - want)) < scaled_tol(want, 8)

    def test_conformally_flat_charts_are_flat(self):
        cases = [
            (charts.euclidean(5), [0.1, 0.2, -0.1, 0.3, 0.0]),
            (charts.round_sphere_stereo(4), [0.2, 0.1, -0.3, 0.15]),
            (charts.poincare_ball(3), [0.2, -0.1, 0.3]),
        ]
        for chart, point in cases:
            assert tractor_curvature(chart, point).norm_inf < 1e-12

    def test_skew_pairs(self):
        om = tractor_curvature(charts.random_polynomial_perturbation(5, seed=19),
                               [0.1, 0.05, -0.1, 0.2, -0.05])
        assert om.weight == 0
        w = om.components
        tol = scaled_tol(w, 12)
        assert np.max(np.abs(w + w.transpose(1, 0, 2, 3))) < tol
        assert np.max(np.abs(w + w.transpose(0, 1, 3, 2))) < tol

    def test_divergence_expands_in_cotton_and_bach(self):
        d = 5
        ch = charts.random_polynomial_perturbation(d, seed=6)
        p = np.array([0.1, -0.1, 0.15, 0.2, -0.05])
        dv = tractor_curvature_divergence(ch, p)
        assert dv.weight == -2
        pk = curvature.riemann(ch, p)
        cot, bach = pk.cotton.components, pk.bach.components
        want = np.zeros((d, d + 2, d + 2))
        want[:, 1:d + 1, 1:d + 1] = (d - 4.0) * cot
        want[:, d + 1, 1:d + 1] = -bach.T
        want[:, 1:d + 1, d + 1] = bach.T
        assert np.max(np.abs(dv.components - want)) < scaled_tol(want, 7)


class TestWTractor:
    def test_einstein_four_manifold_vanishes(self):
        w = w_tractor(charts.product_spheres(2, 1.0, 2, 1.0),
                      [0.1, -0.2, 0.3, 0.1])
        assert w.norm_inf < 1e-10

    def test_conformally_flat_vanishes(self):
        cases = [
            (charts.euclidean(5), [0.1, 0.2, -0.1, 0.3, 0.0]),
            (charts.round_sphere_stereo(4), [0.2, 0.1, -0.3, 0.15]),
            (charts.poincare_ball(3), [0.2, -0.1, 0.3]),
        ]
        for chart, point in cases:
            assert w_tractor(chart, point).norm_inf < 1e-12

    def test_einstein_product_nonzero_with_null_x(self):
        ch = charts.product_spheres(2, 1.0, 3, np.sqrt(2.0))
        p = [0.1, -0.2, 0.15, 0.05, -0.1]
        w = w_tractor(ch, p)
        assert w.weight == -2
        assert w.norm_inf > 1.0
        x = projectors(ch, p)["X"]
        for slot in range(4):
            hook = contract_tractor_slots(x, w, slot_s=slot)
            assert hook.norm_inf < 1e-10 * w.norm_inf

    def test_parallel_tractor_hooks_to_zero(self):
        ch = charts.product_spheres(2, 1.0, 3, np.sqrt(2.0))
        p = [0.1, -0.2, 0.15, 0.05, -0.1]
        w = w_tractor(ch, p)
        one = ScalarField(5, lambda xs: 1.0 + 0.0 * xs[0], weight=1)
        i = splitting(ch, p, one)
        hook = contract_tractor_slots(i, w, slot_s=0)
        assert hook.norm_inf < scaled_tol(w.components, 12)

    def test_weyl_type_symmetries(self):
        w = w_tractor(charts.random_polynomial_perturbation(5, seed=7),
                      [0.1, 0.05, -0.1, 0.2, -0.05])
        c = w.components
        tol = scaled_tol(c, 11)
        assert np.max(np.abs(c + c.transpose(1, 0, 2, 3))) < tol
        assert np.max(np.abs(c + c.transpose(0, 1, 3, 2))) < tol
        assert np.max(np.abs(c - c.transpose(2, 3, 0, 1))) < tol
        cyc = c + c.transpose(0, 2, 3, 1) + c.transpose(0, 3, 1, 2)
        assert np.max(np.abs(cyc)) < tol
        jm = pairing_matrix(w.metric)
        assert np.max(np.abs(np.einsum("AC,ABCE->BE", jm, c))) < tol
        assert np.max(np.abs(np.einsum("BE,ABCE->AC", jm, c))) < tol


class TestHashAction:
    def test_skew_endomorphism_kills_bundle_metric(self):
        ch = charts.product_spheres(2, 1.0, 2, 1.0)
        p = [0.1, -0.2, 0.3, 0.1]
        h = bundle_metric(ch, p)
        rng = np.random.default_rng(3)
        s = rng.normal(size=(6, 6))
        skew = h.replace_components(s - s.T)
        assert hash_apply(skew, h).norm_inf < 1e-13

    def test_zero_endomorphism_acts_as_zero(self):
        ch = charts.euclidean(3)
        p = [0.1, 0.2, -0.1]
        h = bundle_metric(ch, p)
        t = bare_value(ch, p, np.arange(5.0), weight=1)
        gone = h.replace_components(h.components - h.components)
        assert hash_apply(gone, t).norm_inf == 0.0

    def test_raised_metric_acts_as_minus_slot_count(self):
        ch = charts.poincare_ball(3)
        p = [0.2, -0.1, 0.3]
        h = bundle_metric(ch, p)
        rng = np.random.default_rng(8)
        v = bare_value(ch, p, rng.normal(size=5), weight=0)
        np.testing.assert_allclose(hash_apply(h, v).components, -v.components,
                                   atol=1e-13)
        t = bare_value(ch, p, rng.normal(size=(5, 5)), weight=0)
        np.testing.assert_allclose(hash_apply(h, t).components,
                                   -2.0 * t.components, atol=1e-13)

    def test_double_hash_vanishes_on_flat(self):
        ch = charts.euclidean(5)
        p = [0.1, 0.2, -0.1, 0.3, 0.0]
        w = w_tractor(ch, p)
        rng = np.random.default_rng(12)
        t = bare_value(ch, p, rng.normal(size=(7, 7)), weight=1)
        out = hash_apply(w, t, double=True)
        assert out.norm_inf == 0.0
        assert out.weight == w.weight + t.weight


class TestBoxAndSplittingVariants:
    def test_dimension_four_is_rejected(self):
        ch = charts.random_polynomial_perturbation(4, seed=2)
        p = [0.1, -0.1, 0.2, 0.05]
        fld = ScalarField(4, lambda xs: xs[0] * xs[1], weight=1)
        with pytest.raises(DimensionError):
            box_w(fld, ch, p)
        with pytest.raises(DimensionError):
            fD(fld, ch, p)

    def test_flat_reduction_on_density(self):
        ch = charts.euclidean(5)
        p = np.array([0.2, -0.1, 0.3, 0.05, -0.15])
        fld = ScalarField(5, lambda xs: xs[0] ** 3 + 2.0 * xs[1] * xs[2],
                          weight=2)
        out = box_w(fld, ch, p)
        assert out.weight == 0
        assert float(out.components) == pytest.approx(-6.0 * p[0], abs=1e-12)

    def test_flat_reduction_on_tractor_field(self):
        ch = charts.euclidean(5)
        p = np.array([0.2, -0.1, 0.3, 0.05, -0.15])
        fld, _ = random_tractor_field(5, -1, seed=14)
        out = box_w(fld, ch, p)
        dd = tractor_connection(fld, ch, p, times=2).components
        lap = -np.einsum("aa...->...", dd)
        np.testing.assert_allclose(out.components, lap, atol=1e-12)

    def test_curved_conformally_flat_reduction(self):
        ch = charts.poincare_ball(5)
        p = np.array([0.1, -0.2, 0.15, 0.05, 0.1])
        fld = ScalarField(5, lambda xs: xs[0] ** 2 - xs[3] * xs[4], weight=1)
        out = box_w(fld, ch, p)
        pk = curvature.riemann(ch, p)
        dd = curvature.covariant_derivative(fld, ch, p, times=2).components
        lap = -float(np.einsum("ab,ab->",
                               np.linalg.inv(pk.g.components), dd))
        want = lap - float(pk.jcal.components) * (p[0] ** 2 - p[3] * p[4])
        assert float(out.components) == pytest.approx(want, abs=1e-10)

    def test_parallel_weight_zero_reduction(self):
        ch = charts.product_spheres(2, 1.0, 3, np.sqrt(2.0))
        p = np.array([0.1, -0.2, 0.15, 0.05, -0.1])
        one = ScalarField(5, lambda xs: 1.0 + 0.0 * xs[0], weight=1)
        ifld = splitting_field(ch, one)
        out = fD(ifld, ch, p)
        assert out.weight == -1
        assert np.max(np.abs(out.components[:6])) < 1e-14
        np.testing.assert_allclose(out.components[6],
                                   box_w(ifld, ch, p).components, atol=1e-14)

    def test_w_is_annihilated_by_parallel_splitting(self):
        ch = charts.product_spheres(2, 1.0, 3, np.sqrt(2.0))
        p = np.array([0.1, -0.2, 0.15, 0.05, -0.1])
        wf = w_field(ch)
        out = fD(wf, ch, p)
        one = ScalarField(5, lambda xs: 1.0 + 0.0 * xs[0], weight=1)
        i = splitting(ch, p, one)
        hook = contract_tractor_slots(i, out, slot_s=0)
        assert hook.norm_inf < scaled_tol(out.components, 10)
        # with sigma = 1 parallel the contraction collapses to
        # (d+2w-2) w rho W + sigma box W
        w = w_tractor(ch, p)
        red = 2.0 * i.rho * w.components + box_w(wf, ch, p).components
        np.testing.assert_allclose(hook.components, red, atol=1e-14)


class TestScaleCovariance:
    def _setup(self, seed=2):
        d = 4
        ch = charts.random_polynomial_perturbation(d, seed=seed)
        p = np.array([0.15, -0.1, 0.2, 0.05])
        rng = np.random.default_rng(seed + 50)
        om_table = {a: 0.25 * rng.uniform(-1, 1)
                    for a in np.ndindex(*(3,) * d) if 0 < sum(a) <= 2}
        om = ScalarField(d, lambda xs: jet_poly(xs, om_table), weight=0,
                         label="omega")
        hat = charts.conformal_rescale(ch, om)
        w0 = poly_eval(om_table, p)
        ups = np.array([poly_eval(poly_diff(om_table, a), p)
                        for a in range(d)])
        return ch, hat, p, om_table, w0, ups

    def test_curvature_tractors(self):
        ch, hat, p, _, w0, ups = self._setup()
        for op in (tractor_curvature, w_tractor):
            a, b = op(ch, p), op(hat, p)
            moved = transform_tractor(a, ups, omega_p=w0)
            assert np.max(np.abs(moved.components - b.components)) \
                < scaled_tol(b.components, 9)

    def test_connection_and_splitting(self):
        ch, hat, p, om_table, w0, ups = self._setup(seed=3)
        rng = np.random.default_rng(77)
        sig_table = random_poly(rng, 4, 2, scale=0.3)
        sig_table[(0,) * 4] += 2.0
        sigma = ScalarField(4, lambda xs: jet_poly(xs, sig_table), weight=1)
        sigma_hat = ScalarField(
            4, lambda xs: jet_poly(xs, om_table).exp() * jet_poly(xs, sig_table),
            weight=1)
        na = tractor_connection(splitting_field(ch, sigma), ch, p)
        nb = tractor_connection(splitting_field(hat, sigma_hat), hat, p)
        moved = transform_tractor(na, ups, omega_p=w0)
        assert np.max(np.abs(moved.components - nb.components)) \
            < scaled_tol(nb.components, 9)
        ia = splitting(ch, p, sigma)
        ib = splitting(hat, p, sigma_hat)
        moved = transform_tractor(ia, ups, omega_p=w0)
        assert np.max(np.abs(moved.components - ib.components)) \
            < scaled_tol(ib.components, 11)
        assert abs(tractor_metric(ia, ia) - tractor_metric(ib, ib)) \
            < scaled_tol(ib.components, 11)

    def test_d_operator(self):
        ch, hat, p, om_table, w0, ups = self._setup(seed=5)
        rng = np.random.default_rng(91)
        tbl = random_poly(rng, 4, 2, scale=0.4)
        fld = ScalarField(4, lambda xs: jet_poly(xs, tbl), weight=1)
        fld_hat = ScalarField(
            4, lambda xs: jet_poly(xs, om_table).exp() * jet_poly(xs, tbl),
            weight=1)
        da = tractor_D(fld, ch, p)
        db = tractor_D(fld_hat, hat, p)
        moved = transform_tractor(da, ups, omega_p=w0)
        assert np.max(np.abs(moved.components - db.components)) \
            < scaled_tol(db.components, 9)


class TestParallelTractors:
    @pytest.mark.parametrize("a,b,c", [
        (0.5, (0.0, 0.0, 0.0, 0.0), 0.5),
        (0.5, (0.0, 0.0, 0.0, 0.0), -0.5),
        (0.3, (0.2, -0.1, 0.4, 0.1), -0.25),
        (0.0, (1.0, 0.0, 0.0, 0.0), 0.0),
    ])
    def test_quadric_scales_prolong_to_parallel(self, a, b, c):
        ch = charts.euclidean(4)
        sigma = quadric_field(4, a, b, c)
        rng = np.random.default_rng(1)
        for _ in range(3):
            p = rng.uniform(-0.6, 0.6, size=4)
            conn = tractor_connection(splitting_field(ch, sigma), ch, p)
            assert conn.norm_inf < 1e-9

    def test_failure_is_bounded_by_trace_free_hessian(self):
        ch = charts.random_polynomial_perturbation(4, seed=25)
        p = np.array([0.1, -0.2, 0.15, 0.1])
        sigma = ScalarField(4, lambda xs: 1.0 + xs[0] ** 2 * xs[1] - xs[2],
                            weight=1)
        conn = tractor_connection(splitting_field(ch, sigma), ch, p)
        pk = curvature.riemann(ch, p)
        g = pk.g.components
        ginv = np.linalg.inv(g)
        dd = curvature.covariant_derivative(sigma, ch, p, times=2).components
        val = 1.0 + p[0] ** 2 * p[1] - p[2]
        m = dd + val * pk.schouten.components
        tf = m - (float(np.einsum("ab,ab->", ginv, m)) / 4.0) * g
        assert np.max(np.abs(tf)) > 1e-2
        np.testing.assert_allclose(conn.components[:, 1:5], tf, atol=1e-10)
        assert conn.norm_inf >= np.max(np.abs(tf)) - 1e-10

    def test_quadric_norm_matches_coefficient_formula(self):
        ch = charts.euclidean(3)
        rng = np.random.default_rng(6)
        a, b, c = 0.4, np.array([0.3, -0.2, 0.5]), -0.35
        sigma = quadric_field(3, a, b, c)
        vals = []
        for _ in range(20):
            p = rng.uniform(-0.8, 0.8, size=3)
            i = splitting(ch, p, sigma)
            vals.append(tractor_metric(i, i))
        vals = np.array(vals)
        assert np.var(vals) < 1e-10
        np.testing.assert_allclose(vals, quadric_i_norm_sq(a, b, c),
                                   atol=1e-11)

    def test_unit_scale_norm_constant_on_einstein_product(self):
        ch = charts.product_spheres(2, 1.0, 3, np.sqrt(2.0))
        one = ScalarField(5, lambda xs: 1.0 + 0.0 * xs[0], weight=1)
        rng = np.random.default_rng(15)
        vals = []
        for _ in range(5):
            p = rng.uniform(-0.2, 0.2, size=5)
            i = splitting(ch, p, one)
            vals.append(tractor_metric(i, i))
        assert np.var(np.array(vals)) < 1e-10
        assert vals[0] == pytest.approx(-0.25, abs=1e-12)

    def test_splitting_norm_assembles_from_jets(self):
        # h(D sigma, D sigma) = (2/d) sigma (Delta - J) sigma + |d sigma|^2
        ch = charts.random_polynomial_perturbation(5, seed=28)
        p = np.array([0.1, -0.1, 0.2, 0.05, -0.15])
        rng = np.random.default_rng(44)
        tbl = random_poly(rng, 5, 2, scale=0.4)
        sigma = ScalarField(5, lambda xs: jet_poly(xs, tbl), weight=1)
        i = splitting(ch, p, sigma)
        lhs = tractor_metric(i, i)
        pk = curvature.riemann(ch, p)
        ginv = np.linalg.inv(pk.g.components)
        grad = curvature.covariant_derivative(sigma, ch, p).components
        dd = curvature.covariant_derivative(sigma, ch, p, times=2).components
        lap = -float(np.einsum("ab,ab->", ginv, dd))
        val = poly_eval(tbl, p)
        rhs = 0.4 * val * (lap - float(pk.jcal.components) * val) \
            + float(grad @ ginv @ grad)
        assert abs(lhs - rhs) < (1.0 + abs(rhs)) * 1e-11
