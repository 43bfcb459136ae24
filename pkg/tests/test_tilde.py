"""Transform phi -> phi~: closed-form oracle, root sandwich, rate table."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from evglab.geometry import build_manifold
from evglab.tilde import (DecayProfile, fit_decay_exponent, lambda_tilde,
                          power_log_profile, predicted_rate_exponent,
                          tilde_direct, tilde_direct_full, tilde_via_root,
                          tilde_suite_report)


class TestDirectMinimizer:
    def test_constant_profile_matches_stationarity_oracle(self):
        # For phi = kappa the objective delta + delta^{-2n} kappa is
        # stationary at delta* = (2 n kappa)^{1/(2n+1)} with minimum
        # delta* (1 + 1/(2n)); calculus oracle, frozen here.
        n, kappa = 3, 0.01
        delta_star = (2 * n * kappa) ** (1.0 / (2 * n + 1))
        expected = delta_star * (1.0 + 1.0 / (2 * n))
        got = tilde_direct_full(lambda r: kappa, 10.0, n)
        assert got.value == pytest.approx(expected, rel=1e-7)
        assert got.delta == pytest.approx(delta_star, rel=1e-6)

    def test_inverse_power_value_bracket(self):
        # phi = 1/r, n = 3, r = 1e4: t(r) = sqrt(r), and the value lies in
        # [r^{-1/14}, 2 r^{-1/14}] = [10^{-4/14}, 2*10^{-4/14}]
        val = tilde_direct(lambda r: 1.0 / r, 1e4, 3)
        lo = 10.0 ** (-4.0 / 14.0)
        assert lo <= val <= 2.0 * lo

    def test_monotone_in_r(self):
        phi = power_log_profile(1.0, 0.0).phi
        vals = [tilde_direct(phi, r, 3) for r in (1.0, 10.0, 100.0, 1e4)]
        assert all(a >= b - 1e-12 for a, b in zip(vals, vals[1:]))

    def test_rejects_nonpositive_radius(self):
        with pytest.raises(ValueError):
            tilde_direct(lambda r: 1.0, 0.0, 3)

    @given(a1=st.floats(0.2, 2.0), gap=st.floats(1.0, 3.0),
           r=st.floats(1.0, 1e5))
    @settings(max_examples=25, deadline=None)
    def test_monotone_in_profile(self, a1, gap, r):
        # phi1 <= phi2 pointwise implies phi1~ <= phi2~
        p1 = power_log_profile(a1, 0.0, C=1.0).phi
        p2 = power_log_profile(a1, 0.0, C=gap).phi
        assert tilde_direct(p1, r, 3) <= tilde_direct(p2, r, 3) + 1e-10

    def test_non_unimodal_bracket_flagged(self):
        # a notched (non-monotone) profile creates two separated basins
        # in delta with a high barrier between; the flag must trip and
        # the refinement must still land in the deeper basin
        def phi(t):
            t = np.asarray(t, dtype=float)
            return np.where((t >= 1e-3) & (t <= 1e-2), 1e-3, 1.0)

        res = tilde_direct_full(phi, 1.0, 3)
        assert not res.unimodal
        # deeper basin: stationary point of delta + 1e-3 delta^{-6}
        d_star = (6e-3) ** (1.0 / 7.0)
        assert res.delta == pytest.approx(d_star, rel=0.05)
        assert res.value == pytest.approx(d_star * (1 + 1.0 / 6.0), rel=0.05)


class TestRootBound:
    def test_exact_root_for_inverse_power(self):
        # t/phi(t) = t^2 = r, so t = sqrt(r); algebra oracle
        phi = lambda t: 1.0 / t
        lo, hi = tilde_via_root(phi, 49.0, 3)
        t_root = math.sqrt(49.0)
        assert lo == pytest.approx(phi(t_root) ** (1.0 / 7.0), rel=1e-8)
        assert hi == pytest.approx(2.0 * lo, rel=1e-12)

    @pytest.mark.parametrize("a,b", [(1.0, 0.0), (0.5, 0.0), (0.0, 1.0), (2.0, -1.0)])
    def test_sandwich_for_power_log_profiles(self, a, b):
        prof = power_log_profile(a, b)
        for r in np.geomspace(1.0, 1e6, 7):
            direct = tilde_direct(prof.phi, float(r), 3)
            lo, hi = tilde_via_root(prof.phi, float(r), 3)
            assert lo - 1e-9 <= direct <= hi + 1e-9

    def test_bracket_failure_for_nondecaying_profile(self):
        with pytest.raises(ArithmeticError):
            tilde_via_root(lambda t: 1.0 + t, 10.0, 3)


class TestRateTable:
    @pytest.mark.parametrize("a,b,tol", [
        (1.0, 0.0, 0.05),
        (0.5, 0.0, 0.05),
    ])
    def test_fitted_exponent_matches_rate(self, a, b, tol):
        prof = power_log_profile(a, b)
        n = 3
        slope = fit_decay_exponent(lambda r: tilde_direct(prof.phi, r, n))
        target = predicted_rate_exponent(a, n)
        assert abs(slope - target) <= tol * abs(target)

    def test_pure_log_profile_exponent_near_zero(self):
        # (a, b) = (0, 1): the power-law part of the rate is r^0, the
        # residual slope is the log factor; 5 percentage points absolute
        prof = power_log_profile(0.0, 1.0)
        slope = fit_decay_exponent(lambda r: tilde_direct(prof.phi, r, 3))
        assert abs(slope) <= 0.05


class TestDecayProfile:
    def test_validate_accepts_decaying(self):
        power_log_profile(1.0, 0.0).validate()

    def test_validate_rejects_constant(self):
        with pytest.raises(ValueError):
            DecayProfile(phi=lambda r: 1.0).validate()

    def test_validate_rejects_negative(self):
        with pytest.raises(ValueError):
            DecayProfile(phi=lambda r: -1.0 / (1.0 + r)).validate()


class TestLambdaTilde:
    def test_rejects_flat_model(self):
        m = build_manifold("euclidean", 3)
        with pytest.raises(ValueError):
            lambda_tilde(m, 10.0)

    def test_dominates_lambda_and_decreases(self):
        m = build_manifold("exp_taper", 3, {"c": 0.8})
        vals = []
        for r in (1.0, 10.0, 100.0):
            lt = lambda_tilde(m, r)
            assert m.lam(r) <= lt + 1e-12
            vals.append(lt)
        assert vals[0] >= vals[1] >= vals[2]

    def test_poly_taper_a1_fit(self):
        # Lambda ~ 3c(1-c) log(r)/r for a = 1; the transform's power-law
        # exponent is -1/14 for n = 3, with a slow (log r)^{1/14} factor
        # that skews a finite-window fit toward shallower slopes, hence
        # the wide tolerance.
        m = build_manifold("poly_taper", 3, {"c": 0.5, "a": 1.0})
        slope = fit_decay_exponent(lambda r: lambda_tilde(m, r),
                                   r_lo=1e4, r_hi=1e6, points=9)
        target = -1.0 / 14.0
        assert abs(slope - target) <= 0.15 * abs(target)


def test_suite_report_passes():
    profiles = [power_log_profile(1.0, 0.0), power_log_profile(0.5, 0.0),
                power_log_profile(0.0, 1.0), power_log_profile(2.0, 0.0),
                power_log_profile(1.0, 1.0), power_log_profile(0.5, -0.5)]
    radii = np.geomspace(1.0, 1e6, 12)
    rep = tilde_suite_report(3, profiles, radii)
    assert rep.hard_passed
