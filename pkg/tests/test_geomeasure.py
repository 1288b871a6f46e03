import math

import numpy as np
import pytest

from convexsym import (DegeneratePolygon, GridFunction, Polygon, anisotropic_energy,
                       anisotropic_tv, coarea_check, gronwall_bound,
                       isoperimetric_check, isoperimetric_energy_product,
                       level_set_energy, level_set_polygons, masked_gradient,
                       perimeter, random_convex_polygon, wulff_polygon)

from conftest import builtin_gauges, cone_on_disk, disk_grid, square_grid


class TestGradientAndTV:
    def test_constant_has_zero_tv(self, euclid):
        u = square_grid(20, lambda X, Y: np.full_like(X, 4.2))
        assert anisotropic_tv(u, euclid) == 0.0

    def test_linear_function_any_gauge(self):
        w = np.array([0.8, -1.7])
        u = square_grid(30, lambda X, Y: w[0] * X + w[1] * Y)
        for name, g in builtin_gauges().items():
            expected = g.value(w) * u.measure
            assert anisotropic_tv(u, g) == pytest.approx(expected, rel=1e-10), name

    def test_linear_on_masked_disk(self, euclid):
        u = disk_grid(40, lambda X, Y: X)
        assert anisotropic_tv(u, euclid) == pytest.approx(u.measure, rel=1e-10)

    def test_cone_total_variation(self, euclid):
        u = cone_on_disk(257)
        assert anisotropic_tv(u, euclid) == pytest.approx(math.pi, rel=0.02)

    def test_masked_gradient_one_sided_at_boundary(self):
        vals = np.array([[1.0, 2.0, 3.0]])
        u = GridFunction(vals, np.ones((1, 3), bool), 1.0)
        gx, gy = masked_gradient(u)
        np.testing.assert_allclose(gx, [[1.0, 1.0, 1.0]])
        np.testing.assert_allclose(gy, np.zeros((1, 3)))

    def test_energy_power(self, euclid):
        u = square_grid(20, lambda X, Y: 2.0 * X)
        assert anisotropic_energy(u, euclid, 2.0) == pytest.approx(4.0, rel=1e-12)
        assert anisotropic_energy(u, euclid, 0.5) == pytest.approx(math.sqrt(2.0), rel=1e-12)


class TestPerimeter:
    def test_unit_square_euclidean(self, euclid):
        sq = Polygon(np.array([[0, 0], [1, 0], [1, 1], [0, 1]], float))
        assert perimeter(sq, euclid) == pytest.approx(4.0)

    def test_wulff_shape_perimeter(self):
        for name, g in builtin_gauges().items():
            r = 0.8
            w = wulff_polygon(g, r, 256)
            expected = 2.0 * g.kappa() * r  # n kappa_n r^(n-1), n = 2
            assert perimeter(w, g) == pytest.approx(expected, rel=1e-3), name

    def test_scaling_homogeneity(self, euclid):
        rng = np.random.default_rng(1)
        poly = random_convex_polygon(rng, 10)
        for lam in (0.5, 2.0, 7.0):
            assert perimeter(poly.scaled(lam), euclid) == pytest.approx(
                lam * perimeter(poly, euclid), rel=1e-12)

    def test_degenerate_rejected(self):
        with pytest.raises(DegeneratePolygon):
            Polygon(np.array([[0, 0], [1, 0], [1, 0], [0, 1]], float))
        with pytest.raises(DegeneratePolygon):
            Polygon(np.array([[0, 0], [1, 1]], float))

    def test_orientation_normalized(self, euclid):
        cw = Polygon(np.array([[0, 0], [0, 1], [1, 1], [1, 0]], float))
        assert cw.area > 0
        assert perimeter(cw, euclid) == pytest.approx(4.0)


class TestCoarea:
    def test_cone_residual_and_refinement(self, euclid):
        fine = coarea_check(cone_on_disk(257), euclid)
        coarse = coarea_check(cone_on_disk(65), euclid)
        assert fine.rel_residual <= 0.03
        assert fine.rel_residual < coarse.rel_residual

    def test_smooth_bump(self, euclid):
        u = disk_grid(129, lambda X, Y: np.exp(-4.0 * (X**2 + Y**2)))
        rep = coarea_check(u, euclid)
        assert rep.rel_residual <= 0.05

    def test_zero_function(self, euclid):
        u = square_grid(10, lambda X, Y: np.zeros_like(X))
        rep = coarea_check(u, euclid)
        assert rep.total_variation == 0.0 and rep.coarea_integral == 0.0
        assert rep.rel_residual == 0.0

    def test_level_set_polygons_of_cone(self, euclid):
        u = cone_on_disk(129)
        polys = level_set_polygons(u, 0.5)
        assert len(polys) == 1
        assert polys[0].area == pytest.approx(math.pi * 0.25, rel=0.02)
        assert perimeter(polys[0], euclid) == pytest.approx(math.pi, rel=0.02)


class TestIsoperimetric:
    def test_unit_square_values(self, euclid):
        res = isoperimetric_check(Polygon(np.array([[0, 0], [1, 0], [1, 1], [0, 1]],
                                                   float)), euclid)
        assert res.perimeter == pytest.approx(4.0)
        assert res.bound == pytest.approx(2.0 * math.sqrt(math.pi))
        assert res.ratio == pytest.approx(2.0 / math.sqrt(math.pi))

    def test_wulff_equality_case(self):
        for name, g in builtin_gauges().items():
            res = isoperimetric_check(wulff_polygon(g, 1.0, 256), g)
            assert 1.0 - 1e-9 <= res.ratio <= 1.001, name

    def test_hundred_random_convex_polygons(self):
        for name, g in builtin_gauges().items():
            rng = np.random.default_rng(42)
            for _ in range(100):
                poly = random_convex_polygon(rng, int(rng.integers(4, 16)),
                                             scale=rng.uniform(0.2, 3.0))
                assert isoperimetric_check(poly, g).ratio >= 1.0 - 1e-9, name


class TestLevelSetEnergy:
    def test_empty_superlevel_set(self, euclid):
        u = cone_on_disk(65)
        prof = level_set_energy(u, euclid, np.array([0.0, 0.5, 1.0, 2.0]))
        assert prof.grad_integral[-1] == 0.0
        assert prof.grad_sq_integral[-2] == 0.0  # t = max|u| is already empty

    def test_cone_energies(self, euclid):
        u = cone_on_disk(257)
        ts = np.linspace(0.0, 0.95, 30)
        prof = level_set_energy(u, euclid, ts)
        exact = math.pi * (1.0 - ts) ** 2
        assert np.max(np.abs(prof.grad_sq_integral - exact)) <= 0.03 * math.pi
        assert np.max(np.abs(prof.grad_integral - exact)) <= 0.03 * math.pi

    def test_monotone_nonincreasing(self, euclid):
        u = disk_grid(65, lambda X, Y: np.cos(2 * X) * np.cos(Y) + 1.1)
        prof = level_set_energy(u, euclid)
        assert np.all(np.diff(prof.grad_integral) <= 1e-14)
        assert np.all(np.diff(prof.grad_sq_integral) <= 1e-14)

    def test_energy_decay_product_on_smooth_bump(self, euclid):
        u = disk_grid(129, lambda X, Y: (1.0 - X**2 - Y**2) / 4.0)
        tmax = float(u.values.max())
        t, prod = isoperimetric_energy_product(u, euclid, np.linspace(0.0, tmax, 17))
        central = (t >= 0.1 * tmax) & (t <= 0.9 * tmax)
        assert prod[central].min() >= 0.9


class TestGronwall:
    def test_zero_kernel_telescopes(self):
        t = np.linspace(0.0, 20.0, 2001)
        psi = np.exp(-t)
        bound = gronwall_bound(t, np.zeros_like(t), psi)
        np.testing.assert_allclose(bound, psi - psi[-1], atol=1e-15)
        np.testing.assert_allclose(bound, psi, atol=1e-8)

    def test_constant_kernel_analytic(self):
        k = 0.5
        t = np.linspace(0.0, 20.0, 10_001)
        psi = np.exp(-t)
        bound = gronwall_bound(t, np.full_like(t, k), psi)
        exact = np.exp(-t) / (1.0 - k)
        window = t <= 1.0  # beyond, the [0, 20] truncation dominates
        rel = np.abs(bound[window] - exact[window]) / exact[window]
        assert rel.max() <= 1e-4

    def test_zero_psi(self):
        t = np.linspace(0.0, 5.0, 101)
        assert np.all(gronwall_bound(t, np.ones_like(t), np.zeros_like(t)) == 0.0)

    def test_monotone_in_psi(self):
        t = np.linspace(0.0, 10.0, 1001)
        K = 0.3 * np.ones_like(t)
        psi1 = np.exp(-t) - np.exp(-10.0)
        psi2 = 2.0 * psi1
        b1 = gronwall_bound(t, K, psi1)
        b2 = gronwall_bound(t, K, psi2)
        assert np.all(b1 <= b2 + 1e-14)

    def test_negative_kernel_rejected(self):
        t = np.linspace(0.0, 1.0, 11)
        with pytest.raises(ValueError):
            gronwall_bound(t, -np.ones_like(t), np.exp(-t))
