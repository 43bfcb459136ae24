"""Volume geometry of the model manifolds: Bishop monotonicity, the
volume sandwich, and the remainder-ratio containment."""

import math

import numpy as np
import pytest

from evglab.geometry import (ball_volume, sphere_area, build_manifold,
                             geometric_grid, psi_ratio, remainder_lambda,
                             txsx_check, volume)


def test_ball_and_sphere_constants():
    assert ball_volume(3) == pytest.approx(4.0 * math.pi / 3.0, rel=1e-15)
    assert ball_volume(2) == pytest.approx(math.pi, rel=1e-15)
    assert ball_volume(4) == pytest.approx(math.pi ** 2 / 2.0, rel=1e-15)
    for n in (2, 3, 4, 5, 7):
        assert sphere_area(n) == pytest.approx(n * ball_volume(n), rel=1e-14)


class TestBuildManifold:
    def test_euclidean_flat(self):
        m = build_manifold("euclidean", 3)
        assert m.sigma == 1.0
        r = np.array([0.5, 1.0, 7.0])
        assert np.allclose(m.f(r), r)
        assert np.allclose(m.df(r), 1.0)

    def test_exp_taper_sigma_is_analytic_limit(self):
        # sigma = lim (f/r)^{n-1} = c^{n-1}
        m = build_manifold("exp_taper", 3, {"c": 0.8})
        assert m.sigma == pytest.approx(0.64, rel=1e-15)
        assert m.f_over_r(1e9) == pytest.approx(0.8, rel=1e-9)

    def test_poly_taper_sigma(self):
        m = build_manifold("poly_taper", 3, {"c": 0.5, "a": 0.5})
        assert m.sigma == pytest.approx(0.25, rel=1e-15)

    def test_smooth_pole(self):
        for tag, params in (("exp_taper", {"c": 0.7}),
                            ("poly_taper", {"c": 0.5, "a": 1.0})):
            m = build_manifold(tag, 3, params)
            assert m.f(0.0) == 0.0
            assert m.df(0.0) == pytest.approx(1.0, abs=1e-14)

    @pytest.mark.parametrize("tag,n,params", [
        ("exp_taper", 3, {"c": 1.5}),
        ("exp_taper", 3, {"c": 0.0}),
        ("poly_taper", 3, {"c": 0.5, "a": -1.0}),
        ("poly_taper", 3, {"c": 0.5, "a": 0.0}),
        ("euclidean", 1, {}),
    ])
    def test_rejects_bad_parameters(self, tag, n, params):
        with pytest.raises(ValueError):
            build_manifold(tag, n, params)

    def test_rejects_unknown_family(self):
        with pytest.raises(ValueError):
            build_manifold("hyperbolic", 3)

    def test_curvature_admissibility_on_grid(self):
        grid = geometric_grid(1e-3, 1e3, 25)
        for tag, params in (("exp_taper", {"c": 0.8}),
                            ("poly_taper", {"c": 0.5, "a": 0.5}),
                            ("poly_taper", {"c": 0.5, "a": 1.0})):
            m = build_manifold(tag, 3, params)
            assert np.all(m.d2f(grid) <= 1e-12)
            assert np.all(m.df(grid) > 0)
            assert np.all(m.df(grid) <= 1.0 + 1e-12)
            assert np.all(grid * m.df(grid) <= m.f(grid) * (1 + 1e-12))


class TestVolume:
    def test_euclidean_ball(self):
        m = build_manifold("euclidean", 3)
        assert m.vol(1.0) == pytest.approx(4.0 * math.pi / 3.0, rel=1e-10)

    def test_exp_taper_limit_ratio(self):
        # quadrature oracle on the family: V(r)/(B_3 r^3) -> c^2 at r = 1e3
        m = build_manifold("exp_taper", 3, {"c": 0.8})
        assert m.sigma_x(1e3) == pytest.approx(0.64, rel=2e-3)
        assert abs(m.sigma_x(1e3) - 0.64) < abs(m.sigma_x(1e2) - 0.64)

    @pytest.mark.parametrize("tag,params", [
        ("euclidean", {}),
        ("exp_taper", {"c": 0.8}),
        ("poly_taper", {"c": 0.5, "a": 0.5}),
    ])
    def test_profile_invariants(self, tag, params):
        m = build_manifold(tag, 3, params)
        prof = volume(m, geometric_grid(1e-3, 1e3, 20))
        prof.validate()
        # V(r)/r^n nonincreasing across the grid
        assert np.all(np.diff(prof.sigma_x) <= 1e-10)

    def test_small_radius_ratio_scale_free(self):
        # sigma_x must stay finite and near 1 far below the grid floor,
        # including dimensions where r^n underflows
        m = build_manifold("exp_taper", 5, {"c": 0.8})
        s = m.sigma_x(1e-40)
        assert 0.999999 <= s <= 1.0
        assert m.sigma_x(1e-70) <= 1.0

    def test_rejects_nonmonotone_grid(self):
        m = build_manifold("euclidean", 3)
        with pytest.raises(ValueError):
            volume(m, np.array([1.0, 0.5, 2.0]))


class TestRemainderLambda:
    def test_euclidean_zero(self):
        m = build_manifold("euclidean", 3)
        for r in (0.1, 1.0, 50.0):
            assert remainder_lambda(m, r) == pytest.approx(0.0, abs=1e-10)

    def test_small_radius_limit(self):
        # sigma_x(0+) = 1, so Lambda -> 1 - sigma
        m = build_manifold("exp_taper", 3, {"c": 0.8})
        assert remainder_lambda(m, 1e-6) == pytest.approx(1 - 0.64, abs=1e-5)

    def test_monotone_decay(self):
        m = build_manifold("exp_taper", 3, {"c": 0.8})
        assert remainder_lambda(m, 100.0) < remainder_lambda(m, 10.0)

    def test_poly_taper_asymptotic_exponent(self):
        # Lambda ~ 2.4 c(1-c) r^{-1/2} for a = 1/2; fit the exponent
        m = build_manifold("poly_taper", 3, {"c": 0.5, "a": 0.5})
        rs = np.geomspace(1e3, 1e5, 9)
        lam = np.array([remainder_lambda(m, r) for r in rs])
        slope = np.polyfit(np.log(rs), np.log(lam), 1)[0]
        assert slope == pytest.approx(-0.5, abs=0.035)

    def test_rejects_nonpositive_radius(self):
        m = build_manifold("euclidean", 3)
        with pytest.raises(ValueError):
            remainder_lambda(m, 0.0)


class TestTxsx:
    def test_euclidean_vacuous(self):
        m = build_manifold("euclidean", 3)
        rep = txsx_check(m, geometric_grid(1e-2, 1e2, 15))
        assert rep.hard_passed

    def test_psi_is_decreasing(self):
        ts = np.linspace(1.01, 50.0, 200)
        vals = [psi_ratio(t, 3) for t in ts]
        assert np.all(np.diff(vals) < 0)

    @pytest.mark.parametrize("tag,params", [
        ("exp_taper", {"c": 0.8}),
        ("poly_taper", {"c": 0.5, "a": 0.5}),
    ])
    def test_containment(self, tag, params):
        m = build_manifold(tag, 3, params)
        rep = txsx_check(m, geometric_grid(1e-3, 1e3, 20))
        assert rep.hard_passed, [str(r) for r in rep.failures()]
        rec = next(r for r in rep.records if r.tag == "geometry.txsx_ratio")
        cm = psi_ratio(1.0 / m.sigma, m.n)
        assert rec.details["min_ratio"] >= cm - 1e-9
        assert rec.details["max_ratio"] <= 1.0 + 1e-9
