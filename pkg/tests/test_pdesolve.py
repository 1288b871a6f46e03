import math

import numpy as np
import pytest

from convexsym import (ConfigError, ConstantDrift, Disk, Ellipse, LShape,
                       NonConvergence, Rectangle, SymmetrizedProblem, WulffShape,
                       certify_hypotheses, constant_profile, ellipsoidal_gauge,
                       make_instance, parse_gauge, parse_instance, solve,
                       symmetrized_solution)
from convexsym.rearrange import MonotoneProfile


def torsion_error(nx):
    inst = make_instance(Disk(1.0), nx, f=1.0)
    u, _ = solve(inst)
    X, Y = u.spec.centers()
    exact = (1.0 - X**2 - Y**2) / 4.0
    return float(np.max(np.abs((u.values - exact)[u.mask])))


class TestTorsionOracle:
    def test_disk_torsion_129(self):
        assert torsion_error(129) <= 1e-3

    def test_zero_source(self):
        inst = make_instance(Disk(1.0), 33, f=0.0)
        u, diag = solve(inst)
        assert np.all(u.values == 0.0)
        assert diag.iterations == 1 and diag.converged

    def test_anisotropic_wulff_domain(self):
        # -div(M grad u) = 1 on {x.M^-1 x <= 1} has u = (1 - x.M^-1 x)/4
        g = parse_gauge("ellipse:2,0.5")
        inst = make_instance(WulffShape(g, 1.0), 129, gauge=g, f=1.0)
        u, _ = solve(inst)
        X, Y = u.spec.centers()
        exact = (1.0 - (4.0 * X**2 + Y**2 / 4.0)) / 4.0
        rel = np.max(np.abs((u.values - exact)[u.mask])) / exact.max()
        assert rel <= 0.01

    def test_rotated_flux_matrix(self):
        # quadratic exact solution still resolved by the mixed-term stencil
        g = ellipsoidal_gauge(np.array([[1.25, 0.4], [0.4, 1.0]]))
        inst = make_instance(WulffShape(g, 1.0), 65, gauge=g, f=1.0)
        u, _ = solve(inst)
        minv = np.linalg.inv(g.scale**2 * np.asarray(g.matrix))
        X, Y = u.spec.centers()
        h0sq = (minv[0, 0] * X**2 + 2 * minv[0, 1] * X * Y + minv[1, 1] * Y**2)
        exact = (1.0 - h0sq) / 4.0
        rel = np.max(np.abs((u.values - exact)[u.mask])) / exact.max()
        assert rel <= 0.02


class TestGridConvergence:
    def test_gaussian_source_errors_shrink(self, euclid):
        # radial reference from the symmetrized solver: for radial data on the
        # disk the original and symmetrized problems coincide
        prof_s = np.linspace(0.0, math.pi, 4097)
        fstar = MonotoneProfile(prof_s, np.exp(-prof_s / math.pi), kind="linear")
        p = SymmetrizedProblem(euclid, math.pi, fstar, ConstantDrift(0.0))
        ref = symmetrized_solution(p, points=4097)

        errs = []
        for nx in (65, 129, 257):
            inst = make_instance(Disk(1.0), nx,
                                 f=lambda X, Y: np.exp(-(X**2 + Y**2)))
            u, _ = solve(inst)
            X, Y = u.spec.centers()
            r = np.hypot(X, Y)
            errs.append(float(np.max(np.abs(
                (u.values - ref.value(r))[u.mask]))))
        assert errs[2] < errs[1] < errs[0]
        assert errs[2] <= errs[0] / 4.0  # better than first order overall


class TestDrift:
    def test_negative_sign_drift_converges_and_raises_solution(self):
        base, _ = solve(make_instance(Rectangle(0, 1, 0, 1), 65, f=1.0))
        inst = make_instance(Rectangle(0, 1, 0, 1), 65, drift_B=1.0,
                             drift_sign="-1", f=1.0)
        u, diag = solve(inst)
        assert diag.converged and diag.relaxation == 0.7
        assert u.values.max() > base.values.max()

    def test_positive_sign_keeps_nonnegative(self):
        for shape in (Disk(1.0), Rectangle(0, 1, 0, 1)):
            inst = make_instance(shape, 65, drift_B=1.0, drift_sign="+1", f=1.0)
            u, _ = solve(inst)
            assert u.values[u.mask].min() >= 0.0

    def test_checker_sign_pattern(self):
        inst = make_instance(Disk(1.0), 33, drift_B=1.0, drift_sign="checker", f=1.0)
        assert set(np.unique(inst.sign)) == {-1.0, 1.0}
        u, diag = solve(inst)
        assert diag.converged

    def test_nonconvergence_raised(self):
        inst = make_instance(Disk(1.0), 33, drift_B=50.0, drift_sign="-1", f=1.0)
        with pytest.raises(NonConvergence) as exc:
            solve(inst, max_iter=10)
        assert exc.value.diagnostics.iterations == 10
        assert not exc.value.diagnostics.converged


class TestSymmetry:
    def test_square_solution_symmetries(self):
        inst = make_instance(Rectangle(0, 1, 0, 1), 64, f=1.0)
        u, _ = solve(inst)
        v = u.values
        np.testing.assert_allclose(v, v.T, atol=1e-10)
        np.testing.assert_allclose(v, v[::-1, :], atol=1e-10)

    def test_disk_quadrant_symmetry(self):
        u, _ = solve(make_instance(Disk(1.0), 64, f=1.0))
        np.testing.assert_allclose(u.values, u.values[::-1, :], atol=1e-10)
        np.testing.assert_allclose(u.values, u.values[:, ::-1], atol=1e-10)


class TestCertification:
    def test_gauge_laplacian_flux_margin_zero(self):
        inst = make_instance(Disk(1.0), 33, f=1.0)
        rep = certify_hypotheses(inst, samples=1000, seed=0)
        assert rep.ok
        assert abs(rep.ellipticity_margin) <= 1e-10
        assert rep.drift_margin == 0.0

    def test_doubled_matrix_margin_is_h_squared(self):
        g = ellipsoidal_gauge(np.diag([0.25, 4.0]))  # det 1: no rescaling
        inst = make_instance(Disk(1.0), 33, gauge=g,
                             flux=2.0 * np.asarray(g.matrix), f=1.0)
        rep = certify_hypotheses(inst, samples=500, seed=1)
        assert rep.ok
        assert rep.ellipticity_rel_margin == pytest.approx(1.0, abs=1e-12)

    def test_violating_matrix_rejected(self):
        inst = make_instance(Disk(1.0), 33, flux=0.5 * np.eye(2), f=1.0)
        rep = certify_hypotheses(inst, samples=500, seed=2)
        assert not rep.ok and rep.ellipticity_margin < 0.0

    def test_drift_bound_by_construction(self):
        inst = make_instance(Disk(1.0), 33, drift_B="bump:2,0.4",
                             drift_sign="checker", f=1.0)
        rep = certify_hypotheses(inst, samples=800, seed=3)
        assert rep.ok and rep.drift_margin >= 0.0


class TestShapesAndConfig:
    def test_lshape_mask_excludes_quadrant(self):
        inst = make_instance(LShape(1.0), 64, f=1.0)
        X, Y = inst.spec.centers()
        assert not inst.mask[(X > 0.55) & (Y > 0.55)].any()
        u, _ = solve(inst)
        assert u.values[u.mask].min() >= 0.0

    def test_ellipse_domain_bbox(self):
        inst = make_instance(Ellipse(2.0, 0.5), 64, f=1.0)
        assert inst.spec.ny < inst.spec.nx

    def test_parse_instance_roundtrip(self):
        cfg = {"domain": {"shape": "disk", "radius": 1.0, "nx": 33},
               "gauge": "euclidean",
               "drift": {"B": "const:1", "sign": "-1"}, "f": "const:1",
               "label": "unit-disk"}
        inst = parse_instance(cfg)
        assert inst.label == "unit-disk"
        assert inst.has_drift()
        inst65 = parse_instance(cfg, grid_override=65)
        assert inst65.spec.nx == 65

    def test_config_errors(self):
        with pytest.raises(ConfigError):
            parse_instance({"domain": {"shape": "triangle", "nx": 9}})
        with pytest.raises(ConfigError):
            parse_instance({"domain": {"shape": "disk"}})
        with pytest.raises(ConfigError):
            parse_instance({"domain": {"shape": "disk", "nx": 17},
                            "drift": {"B": "const:-1"}})
        with pytest.raises(ConfigError):
            make_instance(Disk(1.0), 17, flux="p-laplace")

    def test_polygonal_gauge_rejected_for_flux(self):
        g = parse_gauge("polygon:1,1;-1,1;-1,-1;1,-1")
        with pytest.raises(ConfigError):
            make_instance(Disk(1.0), 17, gauge=g, f=1.0)
