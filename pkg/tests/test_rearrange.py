"""Rearrangement machinery, comparison bounds, annular kernel conditions,
and the symmetrization gradient inequality."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from evglab.geometry import ball_volume, build_manifold
from evglab.green import green2_closed, green_alpha_iterate, riesz_constants
from evglab.rearrange import (equimeasurability_gap, k4_euclidean_check,
                              kernel_condition_check, kernel_necessity_demo,
                              polya_szego_check, rearrange, talenti_check)


@pytest.fixture(scope="module")
def flat4():
    return build_manifold("euclidean", 4)


@pytest.fixture(scope="module")
def exp4():
    return build_manifold("exp_taper", 4, {"c": 0.8})


class TestRearrange:
    def test_ball_indicator(self, exp3):
        # indicator of B(o, 2) rearranges to the indicator of [0, V(2))
        f = lambda r: np.where(np.asarray(r) < 2.0, 1.0, 0.0)
        prof = rearrange(f, exp3, r_max=50.0)
        v2 = exp3.vol(2.0)
        inside = prof.t <= v2 * (1 - 1e-6)
        outside = prof.t >= v2 * (1 + 1e-6)
        assert np.all(prof.f_star[inside] == 1.0)
        assert np.all(prof.f_star[outside] == 0.0)

    def test_flat_potential_closed_form(self, flat3):
        # f = G_2 on the flat model: f*(t) = c_2 (t/B_n)^{-(n-2)/n}
        gp = green2_closed(flat3)
        prof = rearrange(gp.G, flat3, r_max=500.0)
        assert prof.exact_monotone_path
        c2 = riesz_constants(3, 2).c_alpha
        want = c2 * (prof.t / ball_volume(3)) ** (-1.0 / 3.0)
        sel = prof.t > 1e-6
        assert np.allclose(prof.f_star[sel], want[sel], rtol=1e-8)

    def test_exact_composition(self, exp3):
        # for radial monotone f the rearrangement composes through V
        f = lambda r: 1.0 / (1.0 + np.asarray(r) ** 2)
        prof = rearrange(f, exp3, r_max=100.0)
        mid = len(prof.t) // 2
        t = prof.t[mid]
        # invert V by bisection and compare
        lo, hi = 1e-6, 200.0
        for _ in range(80):
            r = math.sqrt(lo * hi)
            if exp3.vol(r) < t:
                lo = r
            else:
                hi = r
        assert prof.f_star[mid] == pytest.approx(float(f(r)), rel=1e-8)

    @pytest.mark.parametrize("p", [1.0, 2.0])
    def test_equimeasurability(self, exp3, p):
        f = lambda r: np.exp(-np.asarray(r, dtype=float))
        assert equimeasurability_gap(f, exp3, p, r_max=60.0) < 1e-6

    def test_general_path_for_nonmonotone(self, exp3):
        f = lambda r: np.sin(np.asarray(r)) ** 2 * np.exp(-np.asarray(r))
        prof = rearrange(f, exp3, r_max=40.0)
        assert not prof.exact_monotone_path
        prof.validate()

    @given(a=st.floats(0.3, 3.0), b=st.floats(0.1, 2.0))
    @settings(max_examples=10, deadline=None)
    def test_order_reversal_property(self, a, b, exp3):
        # pointwise domination of sources implies domination of f*
        f1 = lambda r: a * np.exp(-b * np.asarray(r, dtype=float))
        f2 = lambda r: 2.0 * a * np.exp(-b * np.asarray(r, dtype=float))
        p1 = rearrange(f1, exp3, r_max=30.0, points=200)
        p2 = rearrange(f2, exp3, r_max=30.0, points=200)
        assert np.all(p1.f_star <= p2.f_star * (1 + 1e-12))


class TestTalenti:
    def test_flat_equality(self, flat3):
        gp = green2_closed(flat3)
        rep = talenti_check(gp, flat3)
        rec = next(r for r in rep.records if r.tag == "rearrange.talenti_value")
        # equality within quadrature error on the flat model
        assert rec.details["max_ratio"] == pytest.approx(1.0, abs=1e-8)

    def test_exp_taper_dominated_with_vanishing_slack(self, exp3):
        gp = green2_closed(exp3)
        rep = talenti_check(gp, exp3)
        assert rep.hard_passed
        rec = next(r for r in rep.records if r.tag == "rearrange.talenti_value")
        assert rec.details["max_ratio"] <= 1.0 + 1e-6
        assert rec.details["slack_at_rmax"] < 0.05   # ratio -> 1 at large t

    def test_alpha4_on_n5(self):
        m = build_manifold("exp_taper", 5, {"c": 0.8})
        gp = green_alpha_iterate(m, 4)
        rep = talenti_check(gp, m)
        assert rep.hard_passed

    def test_violation_raises(self, exp3):
        gp = green2_closed(exp3)
        inflated = type(gp)(alpha=gp.alpha,
                            G=type(gp.G)(r=gp.G.r, values=gp.G.values * 1.5,
                                         interp="loglog"),
                            dG=gp.dG, flux=gp.flux, manifold=gp.manifold)
        with pytest.raises(AssertionError):
            talenti_check(inflated, exp3)


class TestKernelConditions:
    def test_flat_n4_closed_form(self, flat4):
        # |G_2|^2 over an annulus on flat 4-space:
        # c_2^2 omega_3 log(r2/r1) = gamma^{-1} log(r2^4 / r1^4)
        gp = green2_closed(flat4)
        rep = kernel_condition_check(flat4, gp.G, 2)
        assert rep.hard_passed
        rc = riesz_constants(4, 2)
        from evglab.geometry import sphere_area
        assert rc.gamma_n_alpha ** -1 * 4.0 == pytest.approx(
            rc.c_alpha ** 2 * sphere_area(4), rel=1e-12)

    def test_exp_taper_n4_adjusted_constant(self, exp4):
        gp = green2_closed(exp4)
        rep = kernel_condition_check(exp4, gp.G, 2)
        assert rep.hard_passed, [str(r) for r in rep.failures()]

    def test_odd_alpha_gradient_kernel(self, exp3):
        # alpha = 1 <= n/2 via |dG_2| = 1/A
        gp = green2_closed(exp3)
        rep = kernel_condition_check(exp3, lambda r: np.abs(gp.dG(r)), 1)
        assert rep.hard_passed

    def test_unadjusted_constant_diverges(self, exp4):
        gp = green2_closed(exp4)
        rep = kernel_necessity_demo(exp4, gp.G, 2)
        rec = rep.records[0]
        assert rec.passed, rec.details
        vals = [rec.details[f"r2={r:g}"] for r in (10, 100, 1000)]
        assert vals[0] < vals[1] < vals[2]

    def test_rejects_flat_for_necessity(self, flat4):
        gp = green2_closed(flat4)
        with pytest.raises(ValueError):
            kernel_necessity_demo(flat4, gp.G, 2)


class TestPolyaSzego:
    def test_flat_ratio_one(self, flat3):
        tent = lambda r: max(0.0, 1.0 - float(r))
        dtent = lambda r: -1.0 if r < 1.0 else 0.0
        rep = polya_szego_check(tent, dtent, 1.0, flat3, p=2.0)
        assert rep.records[0].observed == pytest.approx(1.0, abs=1e-9)

    @pytest.mark.parametrize("p", [2.0, 3.0])
    def test_exp_taper_bounded(self, exp3, p):
        tent = lambda r: max(0.0, 1.0 - float(r))
        dtent = lambda r: -1.0 if r < 1.0 else 0.0
        rep = polya_szego_check(tent, dtent, 1.0, exp3, p=p)
        assert rep.records[0].observed <= exp3.sigma ** (-1.0 / 3.0) * (1 + 1e-6)

    def test_tent_family_limit(self, exp3):
        # ratio -> sigma^{-1/n} as the tent spreads out
        ratios = []
        for s in (1.0, 5.0, 25.0):
            tent = lambda r, s=s: max(0.0, 1.0 - float(r) / s)
            dtent = lambda r, s=s: -1.0 / s if r < s else 0.0
            rep = polya_szego_check(tent, dtent, s, exp3, p=3.0)
            ratios.append(rep.records[0].observed)
        cap = exp3.sigma ** (-1.0 / 3.0)
        assert ratios == sorted(ratios)
        assert ratios[-1] == pytest.approx(cap, rel=0.02)


class TestK4Flat:
    def test_finite_and_below_envelope(self):
        rep = k4_euclidean_check(4, 2, r=0.5, R=4.0)
        assert rep.records[0].passed, rep.records[0].details

    def test_rejects_close_annulus(self):
        with pytest.raises(ValueError):
            k4_euclidean_check(4, 2, r=1.0, R=1.5)
