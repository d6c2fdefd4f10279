"""Special-function layer tests.

Frozen expected values were computed independently: gamma via the
recurrence from Gamma(1/2) = sqrt(pi), half-integer Bessel values from
their elementary closed forms, and remaining constants with mpmath at
40 significant digits.
"""

import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fraclap.exceptions import DomainError, OverflowGuardError, PoleError
from fraclap.specfun import (
    bessel_i,
    bessel_k,
    extension_profile,
    extension_profile_deriv,
    frac_order,
    gamma_fn,
    neumann_constant,
    reciprocal_gamma,
)

mp.mp.dps = 40


class TestGamma:
    def test_half(self):
        assert gamma_fn(0.5) == pytest.approx(1.7724538509055160273, rel=1e-13)

    def test_one(self):
        assert gamma_fn(1.0) == pytest.approx(1.0, rel=1e-13)

    def test_two_point_five(self):
        # recurrence from Gamma(1/2): 1.5 * 0.5 * sqrt(pi)
        assert gamma_fn(2.5) == pytest.approx(1.3293403881791370, rel=1e-12)

    @pytest.mark.parametrize("x", [0.0, -1.0, -2.0, -17.0])
    def test_poles(self, x):
        with pytest.raises(PoleError):
            gamma_fn(x)

    def test_twelve_digits_on_box(self):
        rng = np.random.default_rng(42)
        xs = rng.uniform(-5.0, 30.0, 300)
        for x in xs:
            if abs(x - round(x)) < 1e-3 and x < 0.5:
                continue
            ref = float(mp.gamma(mp.mpf(float(x))))
            assert gamma_fn(float(x)) == pytest.approx(ref, rel=1e-12)

    def test_reciprocal_zero_at_poles(self):
        assert reciprocal_gamma(0.0) == 0.0
        assert reciprocal_gamma(-3.0) == 0.0
        assert reciprocal_gamma(2.0) == pytest.approx(1.0, rel=1e-14)


class TestBesselK:
    def test_half_order_closed_form(self):
        # K_{1/2}(s) = sqrt(pi/(2s)) e^{-s}
        assert bessel_k(0.5, 1.0) == pytest.approx(0.46106850444789455844, rel=1e-12)

    def test_negative_order_symmetry(self):
        assert bessel_k(-0.5, 1.0) == bessel_k(0.5, 1.0)

    @given(
        st.floats(min_value=-3.0, max_value=3.0),
        st.floats(min_value=1e-6, max_value=50.0),
    )
    @settings(max_examples=200, deadline=None)
    def test_symmetry_property(self, nu, s):
        assert bessel_k(-nu, s) == bessel_k(nu, s)

    @pytest.mark.parametrize("nu", [0.6, 0.9, 1.7, 2.4])
    def test_small_argument_limit(self, nu):
        # K_nu(s) ~ Gamma(nu)/2 (2/s)^nu as s -> 0+, nu > 0
        s = 1e-5
        ratio = bessel_k(nu, s) * s**nu / (gamma_fn(nu) * 2.0 ** (nu - 1.0))
        assert ratio == pytest.approx(1.0, abs=1e-4)

    def test_domain_error(self):
        with pytest.raises(DomainError):
            bessel_k(1.0, 0.0)
        with pytest.raises(DomainError):
            bessel_k(1.0, -2.0)

    def test_accuracy_box(self):
        rng = np.random.default_rng(7)
        nus = list(rng.uniform(-3, 3, 40)) + [0.0, 1.0, -2.0, 3.0, 2.0 + 1e-7, 1.0 - 1e-5]
        ss = [1e-6, 1e-3, 0.1, 1.0, 1.9, 2.0, 3.0, 7.0, 20.0, 50.0]
        for nu in nus:
            for s in ss:
                ref = float(mp.besselk(mp.mpf(float(nu)), mp.mpf(s)))
                assert bessel_k(float(nu), s) == pytest.approx(ref, rel=1e-10)


class TestBesselI:
    def test_half_order_closed_form(self):
        # I_{1/2}(s) = sqrt(2/(pi s)) sinh s
        assert bessel_i(0.5, 1.0) == pytest.approx(0.93767488824548764672, rel=1e-12)

    @pytest.mark.parametrize("nu", [0.4, 1.3, 2.6])
    def test_small_argument_limit(self, nu):
        s = 1e-5
        ratio = bessel_i(nu, s) / ((s / 2.0) ** nu / gamma_fn(nu + 1.0))
        assert ratio == pytest.approx(1.0, abs=1e-8)

    @pytest.mark.parametrize("nu", [0.0, 0.7, 1.5, 3.0])
    def test_large_argument_limit(self, nu):
        # first correction term is (4 nu^2 - 1)/(8 s)
        s = 600.0
        ratio = bessel_i(nu, s, scaled=True) * math.sqrt(2.0 * math.pi * s)
        assert ratio == pytest.approx(1.0, abs=(4 * nu**2 + 1) / (8 * s) * 1.5 + 1e-6)

    def test_overflow_guard(self):
        with pytest.raises(OverflowGuardError):
            bessel_i(1.0, 800.0)
        assert bessel_i(1.0, 800.0, scaled=True) > 0.0

    def test_domain_error(self):
        with pytest.raises(DomainError):
            bessel_i(0.3, -1.0)

    def test_accuracy_box(self):
        rng = np.random.default_rng(11)
        for nu in list(rng.uniform(-3, 3, 30)) + [-3.0, -1.0, 0.0, 2.0]:
            for s in [1e-6, 0.05, 1.0, 4.0, 18.0, 50.0]:
                ref = float(mp.besseli(mp.mpf(float(nu)), mp.mpf(s)))
                if ref != 0.0:
                    assert bessel_i(float(nu), s) == pytest.approx(ref, rel=1e-10)


def _richardson_fd(f, s, h):
    """4th-order first/second derivatives from steps h and h/2."""
    d1 = lambda hh: (f(s + hh) - f(s - hh)) / (2 * hh)
    d2 = lambda hh: (f(s + hh) - 2 * f(s) + f(s - hh)) / hh**2
    return (4 * d1(h / 2) - d1(h)) / 3, (4 * d2(h / 2) - d2(h)) / 3


class TestBesselODE:
    # s^2 psi'' + s psi' - (s^2 + nu^2) psi = 0; finite-difference residual.
    # Plain h=1e-4 differences hit the float64 roundoff floor ~2e-8, so the
    # residual is formed from Richardson-extrapolated h=1e-3 differences.
    @pytest.mark.parametrize("nu", [-2.3, -0.7, 0.31, 1.6, 2.9])
    @pytest.mark.parametrize("s", [0.7, 2.2, 5.0, 9.0])
    @pytest.mark.parametrize("fn", [bessel_k, bessel_i])
    def test_ode_residual(self, nu, s, fn):
        psi = lambda x: fn(nu, x)
        dp, ddp = _richardson_fd(psi, s, 1e-3)
        res = s**2 * ddp + s * dp - (s**2 + nu**2) * psi(s)
        scale = (s**2 + nu**2) * abs(psi(s))
        assert abs(res) / scale < 1e-8

    @pytest.mark.parametrize("nu,s", [(0.5, 3.0), (1.4, 1.2), (-2.1, 6.0)])
    def test_wronskian(self, nu, s):
        # s (I_nu K_nu' - I_nu' K_nu) = -1 for every order
        ik = bessel_i(nu, s)
        kk = bessel_k(nu, s)
        di = 0.5 * (bessel_i(nu - 1, s) + bessel_i(nu + 1, s))
        dk = -0.5 * (bessel_k(nu - 1, s) + bessel_k(nu + 1, s))
        assert s * (ik * dk - di * kk) == pytest.approx(-1.0, abs=1e-9)


class TestExtensionProfile:
    def test_gamma_half_is_exponential(self):
        assert extension_profile(0.5, 1.0) == pytest.approx(0.3678794411714423216, rel=1e-12)

    @pytest.mark.parametrize("gamma", [0.1, 0.25, 0.5, 0.75, 0.9])
    def test_value_one_at_zero(self, gamma):
        assert extension_profile(gamma, 0.0) == 1.0

    def test_rapid_decay(self):
        assert extension_profile(0.25, 40.0) < 1e-15

    @pytest.mark.parametrize("gamma", [0.25, 0.5, 0.75])
    def test_monotone_decreasing(self, gamma):
        ss = np.linspace(0.0, 12.0, 200)
        vals = [extension_profile(gamma, s) for s in ss]
        assert all(a >= b for a, b in zip(vals, vals[1:]))

    @pytest.mark.parametrize("gamma", [0.25, 0.5, 0.75])
    def test_ode_residual(self, gamma):
        # phi'' + (a/s) phi' - phi = 0 with a = 1 - 2 gamma.  Richardson
        # differences: plain h=1e-4 truncation already exceeds 1e-6 near the
        # singular endpoint (phi'''' ~ s^{2 gamma - 4}).
        a = 1.0 - 2.0 * gamma
        for s in np.linspace(0.1, 10.0, 23):
            phi = lambda x: extension_profile(gamma, x)
            dp, ddp = _richardson_fd(phi, s, 1e-3)
            assert abs(ddp + a / s * dp - phi(s)) < 1e-6

    @pytest.mark.parametrize("gamma", [0.25, 0.5, 0.75])
    def test_deriv_matches_fd(self, gamma):
        for s in [0.3, 1.0, 4.0]:
            h = 1e-6
            fd = (extension_profile(gamma, s + h) - extension_profile(gamma, s - h)) / (2 * h)
            assert extension_profile_deriv(gamma, s) == pytest.approx(fd, rel=1e-8)

    @pytest.mark.parametrize("gamma", [0.25, 0.5, 0.75])
    def test_weighted_slope_limit(self, gamma):
        # s^a phi'(s) -> -1/d_gamma as s -> 0+; the approach is O(s^{2-2g}),
        # eliminated by one known-exponent extrapolation step
        a = 1.0 - 2.0 * gamma
        target = -1.0 / neumann_constant(gamma)
        g = lambda s: s**a * extension_profile_deriv(gamma, s)
        s0 = 1e-5
        w = 4.0 ** -(2.0 - 2.0 * gamma)
        val = (g(s0 / 4.0) - w * g(s0)) / (1.0 - w)
        assert val == pytest.approx(target, rel=1e-5)


class TestFracOrder:
    def test_d_gamma_half_is_one(self):
        assert neumann_constant(0.5) == pytest.approx(1.0, rel=1e-13)

    def test_d_gamma_quarter(self):
        # 2^{-1/2} Gamma(1/4)/Gamma(3/4), frozen from a 40-digit evaluation
        assert neumann_constant(0.25) == pytest.approx(2.0920992401062033, rel=1e-11)

    def test_d_gamma_three_quarters(self):
        assert neumann_constant(0.75) == pytest.approx(0.47798879748612500, rel=1e-11)

    def test_exponent_relation_exact(self):
        fo = frac_order(0.3)
        assert fo.a == 1.0 - 2.0 * 0.3
        assert not fo.extended

    def test_extended_range_flagged(self):
        fo = frac_order(-0.75, extended=True)
        assert fo.extended
        assert math.isnan(fo.d_gamma)

    def test_rejects_out_of_range(self):
        with pytest.raises(DomainError):
            frac_order(1.5)
        with pytest.raises(DomainError):
            frac_order(-0.3)
        with pytest.raises(DomainError):
            frac_order(-1.5, extended=True)
