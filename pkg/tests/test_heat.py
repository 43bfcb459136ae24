"""Radial heat solver: conservation, flat exactness, envelope fits,
small-time and far-field comparisons."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from evglab.geometry import sphere_area
from evglab.green import green2_closed, green_from_kernel
from evglab.heat import (annular_gradient_check, asymptote_sweep,
                         bulk_gaussian_error, default_r_cut,
                         euclidean_gaussian, grigoryan_fit, largedist_check,
                         li_yau_fit, self_convergence, semigroup_check,
                         smalltime_check, solve_heat, table_invariants)


class TestEuclideanGaussian:
    def test_closed_form_value(self):
        # n=3, r=1, t=1/4: (pi)^{-3/2} e^{-1}
        want = math.pi ** -1.5 * math.exp(-1.0)
        assert euclidean_gaussian(3, 1.0, 0.25) == pytest.approx(want, rel=1e-12)
        assert want == pytest.approx(0.066067, rel=1e-4)

    def test_center_value(self):
        for n, t in ((2, 0.3), (5, 2.0)):
            assert euclidean_gaussian(n, 0.0, t) == pytest.approx(
                (4 * math.pi * t) ** (-n / 2.0), rel=1e-14)

    def test_unit_mass(self):
        for n in (2, 3, 5):
            val, _ = quad(lambda r: euclidean_gaussian(n, r, 0.7)
                          * sphere_area(n) * r ** (n - 1), 0, np.inf,
                          epsabs=1e-12, epsrel=1e-10)
            assert val == pytest.approx(1.0, abs=1e-8)

    def test_rejects_nonpositive_time(self):
        with pytest.raises(ValueError):
            euclidean_gaussian(3, 1.0, 0.0)


class TestSolver:
    def test_rejects_bad_t0(self, flat3):
        with pytest.raises(ValueError):
            solve_heat(flat3, 1e-8, 1.0)
        with pytest.raises(ValueError):
            solve_heat(flat3, 0.9, 1.0)

    def test_default_r_cut(self):
        assert default_r_cut(1600.0) == pytest.approx(
            8 * 40 * math.sqrt(math.log(1e10)), rel=1e-12)
        assert default_r_cut(1e-4) == 10.0

    def test_rejects_out_of_range_record_time(self, flat3):
        with pytest.raises(ValueError):
            solve_heat(flat3, 1e-3, 0.1, record_times=[1.0])

    def test_slice_lookup_rejects_unrecorded_time(self, kt_flat_small):
        with pytest.raises(KeyError):
            kt_flat_small.slice_at(0.7123456)

    def test_table_is_immutable(self, kt_flat_small):
        with pytest.raises(ValueError):
            kt_flat_small.H[0, 0] = 1.0

    @pytest.mark.parametrize("fixture", ["kt_flat_small", "kt_exp_small",
                                         "kt_exp_big", "kt_poly_med"])
    def test_table_invariants(self, fixture, request):
        kt = request.getfixturevalue(fixture)
        rep = table_invariants(kt)
        assert rep.hard_passed, [str(r) for r in rep.failures()]

    def test_flat_bulk_matches_gaussian(self, kt_flat_small):
        # default-resolution contract: relative error <= 1e-3 on r^2 <= 8t
        assert bulk_gaussian_error(kt_flat_small) <= 1e-3

    def test_self_convergence(self, kt_exp_small, kt_exp_small_ref):
        assert self_convergence(kt_exp_small, kt_exp_small_ref) <= 1e-3

    def test_semigroup_identity(self, kt_exp_big, exp3):
        rep = semigroup_check(kt_exp_big, exp3, 50.0, 50.0)
        assert rep.records[0].passed, rep.records[0].observed


class TestSmalltime:
    def test_flat_scheme_error_shrinks(self, kt_flat_small, kt_flat_small_ref):
        rep = smalltime_check(kt_flat_small, kt_flat_small_ref)
        assert rep.passed, [str(r) for r in rep.failures()]

    def test_exp_taper_stable(self, kt_exp_small, kt_exp_small_ref):
        rep = smalltime_check(kt_exp_small, kt_exp_small_ref)
        assert rep.passed, [str(r) for r in rep.failures()]
        sup = next(r.observed for r in rep.records
                   if r.name == "normalized residual sup")
        assert 0 < sup < 1.0

    def test_limit_monotone_on_curved(self, kt_exp_small):
        rep = smalltime_check(kt_exp_small)
        rec = next(r for r in rep.records if r.tag == "heat.smalltime_limit")
        assert rec.passed
        assert rec.details["dev_4t0"] >= rec.details["dev_t0"]


class TestEnvelopes:
    def test_li_yau_constants_stable_across_families(self, kt_flat_med,
                                                     kt_exp_med, kt_poly_med,
                                                     flat3, exp3, poly3):
        fits = [li_yau_fit(kt, m) for kt, m in ((kt_flat_med, flat3),
                                                (kt_exp_med, exp3),
                                                (kt_poly_med, poly3))]
        c1s = np.array([f[0] for f in fits])
        c2s = np.array([f[1] for f in fits])
        assert np.all(c1s > 0) and np.all(np.isfinite(c2s))
        mean2 = np.mean(c2s)
        assert np.all(np.abs(c2s - mean2) <= 0.2 * mean2), c2s

    def test_grigoryan_constant_bounded(self, kt_exp_med, kt_poly_med,
                                        exp3, poly3):
        for kt, m in ((kt_exp_med, exp3), (kt_poly_med, poly3)):
            c = grigoryan_fit(kt, m)
            assert 0 < c < 10.0


class TestLargedist:
    def test_flat_numerator_is_scheme_error(self, kt_flat_small, flat3):
        rep = largedist_check(kt_flat_small, flat3)
        sup = next(r.observed for r in rep.records
                   if r.tag == "heat.largedist")
        assert sup < 1e-2

    def test_exp_taper_bounded_and_nested(self, kt_exp_big, exp3, lt_exp3):
        rep = largedist_check(kt_exp_big, exp3, lam_tilde_fn=lt_exp3)
        assert rep.passed, [str(r) for r in rep.failures()]
        assert "model-manifold testbed" in rep.provenance["note"]

    def test_refinement_stability(self, kt_exp_big, kt_exp_big_ref, exp3,
                                  lt_exp3):
        rep = largedist_check(kt_exp_big, exp3, kt_refined=kt_exp_big_ref,
                              lam_tilde_fn=lt_exp3)
        rec = next(r for r in rep.records if r.tag == "heat.largedist_refine")
        assert rec.passed, rec.observed

    def test_band_at_moderate_radius(self, kt_exp_big, exp3, lt_exp3):
        # H/E at r=20, t=r^2 sits inside 1/sigma (1 +/- kappa Lambda~(20))
        # with the fitted normalization constant kappa from the sup
        r, t = 20.0, 400.0
        ratio = kt_exp_big.value(r, t) / euclidean_gaussian(3, r, t)
        lt20 = float(lt_exp3(20.0))
        sup = next(rec.observed for rec in
                   largedist_check(kt_exp_big, exp3, lam_tilde_fn=lt_exp3).records
                   if rec.tag == "heat.largedist")
        kappa = sup * euclidean_gaussian(3, r, 3 * t) * exp3.sigma \
            / euclidean_gaussian(3, r, t)
        lo = (1.0 - kappa * lt20) / exp3.sigma
        hi = (1.0 + kappa * lt20) / exp3.sigma
        assert lo <= ratio <= hi


class TestAsymptoteSweep:
    def test_monotone_to_inverse_sigma(self, kt_exp_big, exp3):
        rep = asymptote_sweep(kt_exp_big, exp3)
        rec = rep.records[0]
        assert rec.passed, rec.details
        vals = [rec.details[f"r={r:g}"] for r in (5, 10, 20, 40)]
        assert vals == sorted(vals)
        assert abs(vals[-1] - 1 / exp3.sigma) / (1 / exp3.sigma) <= 0.05


class TestAnnularGradient:
    def test_finite_and_refinement_stable(self, kt_exp_big, kt_exp_big_ref,
                                          exp3, lt_exp3):
        base = annular_gradient_check(kt_exp_big, exp3, 10.0, 1.0,
                                      lam_tilde_fn=lt_exp3)
        fine = annular_gradient_check(kt_exp_big_ref, exp3, 10.0, 1.0,
                                      lam_tilde_fn=lt_exp3)
        assert np.isfinite(base) and base > 0
        assert 0.5 <= fine / base <= 2.0

    def test_eta_growth_within_envelope(self, kt_exp_big, exp3, lt_exp3):
        # ratio may grow as eta -> 0, but no faster than (1 + 1/sqrt(eta))
        vals = {eta: annular_gradient_check(kt_exp_big, exp3, 10.0, eta,
                                            lam_tilde_fn=lt_exp3)
                for eta in (1.0, 0.25, 0.0625)}
        scale = vals[1.0] / 2.0
        for eta, v in vals.items():
            assert v <= 1.5 * scale * (1.0 + 1.0 / math.sqrt(eta)), (eta, v)


class TestPotentialConsistency:
    def test_time_integral_route_matches_flux_route(self, kt_exp_big, exp3):
        gp = green2_closed(exp3)
        rs = np.array([1.0, 2.0, 3.0, 5.0])
        via_kernel = green_from_kernel(kt_exp_big, exp3, 2, rs)
        direct = gp.G(rs)
        rel = np.abs(via_kernel - direct) / direct
        assert np.max(rel) <= 2e-3, rel
