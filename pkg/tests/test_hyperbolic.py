"""Hyperbolic geometry and explicit-kernel tests.

Frozen values: spherical_k(3, 1, 1) = -sin(1)/sinh(1); the n=2 value was
computed by independent endpoint-substituted quadrature of the transform
integral at 30 digits; heat values come from the classical closed form
(4 pi t)^{-3/2} e^{-t} (rho/sinh rho) e^{-rho^2/(4t)}.
"""

import math

import numpy as np
import pytest

from fraclap.exceptions import DomainError, InvalidPointError
from fraclap.hyperbolic import (
    HeatKernel,
    RadialKernel,
    heat_envelope,
    heat_kernel_for,
    hyperbolic_dim,
    hyperbolic_distance,
    measured_decay,
    measured_singular_exponent,
    radial_convolution,
    radial_point,
    spherical_k,
    sphere_area,
    volume_element,
)

D2 = hyperbolic_dim(2)
D3 = hyperbolic_dim(3)


class TestGeometry:
    def test_dim_invariants(self):
        assert D3.half_nm1 == 1.0
        assert D3.lambda1 == 1.0
        assert D2.lambda1 == 0.25
        with pytest.raises(DomainError):
            hyperbolic_dim(1)

    def test_distance_identity(self):
        o = radial_point(D3, 0.0)
        assert hyperbolic_distance(o, o) == 0.0

    def test_distance_radial_geodesic(self):
        x = radial_point(D3, 1.0)
        o = radial_point(D3, 0.0)
        assert hyperbolic_distance(x, o) == pytest.approx(1.0, abs=1e-12)
        assert hyperbolic_distance(o, x) == pytest.approx(1.0, abs=1e-12)

    def test_distance_rejects_invalid_points(self):
        bad = np.array([1.0, 0.5, 0.0, 0.0])
        with pytest.raises(InvalidPointError):
            hyperbolic_distance(bad, radial_point(D3, 0.0))

    def test_triangle_inequality_random_triples(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            pts = []
            for _ in range(3):
                rho = rng.uniform(0.0, 3.0)
                v = rng.normal(size=3)
                pts.append(radial_point(D3, rho, v))
            dab = hyperbolic_distance(pts[0], pts[1])
            dbc = hyperbolic_distance(pts[1], pts[2])
            dac = hyperbolic_distance(pts[0], pts[2])
            assert dac <= dab + dbc + 1e-10

    def test_volume_element(self):
        assert volume_element(D3, 0.0) == 0.0
        assert volume_element(D2, 1.0) == pytest.approx(math.sinh(1.0), rel=1e-14)
        assert volume_element(D3, 2.0) == pytest.approx(math.sinh(2.0) ** 2, rel=1e-14)

    def test_sphere_area(self):
        assert sphere_area(3) == pytest.approx(4.0 * math.pi, rel=1e-14)
        assert sphere_area(2) == pytest.approx(2.0 * math.pi, rel=1e-14)


class TestSphericalK:
    def test_three_dim_value(self):
        # one application of d_rho/sinh to cos(lam rho): -lam sin(lam rho)/sinh rho
        assert spherical_k(D3, 1.0, 1.0) == pytest.approx(-0.71602291536043387, rel=1e-12)

    @pytest.mark.parametrize("rho", [0.3, 1.0, 2.5])
    def test_lambda_zero_vanishes(self, rho):
        assert spherical_k(D3, 0.0, rho) == pytest.approx(0.0, abs=1e-15)

    def test_two_dim_against_quadrature_oracle(self):
        # independent 30-digit endpoint-substituted quadrature of the
        # transform integral
        assert spherical_k(D2, 1.0, 1.0) == pytest.approx(-1.59806808774957574, rel=1e-6)

    @pytest.mark.parametrize("lam", [0.5, 1.0, 2.0])
    def test_eigenfunction_residual_n3(self, lam):
        # u'' + 2 coth(rho) u' = -(lam^2 + 1) u, residual < 1e-6
        h = 1e-4
        for rho in np.linspace(0.2, 5.0, 17):
            u = lambda r: spherical_k(D3, lam, r)
            du = (u(rho + h) - u(rho - h)) / (2 * h)
            ddu = (u(rho + h) - 2 * u(rho) + u(rho - h)) / h**2
            res = ddu + 2.0 / math.tanh(rho) * du + (lam**2 + 1.0) * u(rho)
            assert abs(res) / ((lam**2 + 1.0) * max(abs(u(rho)), 1e-3)) < 1e-6

    def test_even_function_of_lambda(self):
        assert spherical_k(D3, 1.3, 0.9) == pytest.approx(
            spherical_k(D3, -1.3, 0.9), rel=1e-13
        )

    def test_rejects_nonpositive_rho(self):
        with pytest.raises(DomainError):
            spherical_k(D3, 1.0, 0.0)


class TestHeatKernel:
    def test_on_diagonal_value(self):
        # (4 pi)^{-3/2} e^{-1}
        assert heat_kernel_for(3)(1.0, 0.0) == pytest.approx(0.008258301266124230, rel=1e-10)

    def test_off_diagonal_value(self):
        assert heat_kernel_for(3)(1.0, 1.0) == pytest.approx(0.005472740776373400, rel=1e-10)

    @pytest.mark.parametrize("t", [0.1, 1.0, 10.0])
    def test_mass_h3(self, t):
        assert heat_kernel_for(3).mass(t) == pytest.approx(1.0, abs=1e-6)

    @pytest.mark.parametrize("t", [0.5, 1.0])
    def test_mass_h2(self, t):
        assert heat_kernel_for(2).mass(t, rtol=1e-8, atol=1e-10) == pytest.approx(
            1.0, abs=1e-4
        )

    def test_positive_on_grid(self):
        k = heat_kernel_for(3)
        for t in (0.05, 0.5, 2.0):
            vals = k(t, np.linspace(0.0, 8.0, 40))
            assert np.all(vals > 0.0)

    def test_on_diagonal_monotone_decay(self):
        k = heat_kernel_for(3)
        for t in (0.05, 0.2, 1.0, 4.0):
            assert k(2 * t, 0.0) <= k(t, 0.0)

    def test_small_rho_branch_continuity(self):
        k = heat_kernel_for(5)
        lo, hi = k(1.0, 0.009999), k(1.0, 0.010001)
        assert lo == pytest.approx(hi, rel=1e-6)

    @pytest.mark.parametrize("rho", [0.0, 1.0, 2.0])
    def test_semigroup_property(self, rho):
        # p_{t+s}(rho) = integral p_t(r) p_s(d) dV at t = s = 0.5
        k = heat_kernel_for(3)
        direct = float(k(1.0, rho))
        conv = radial_convolution(
            D3,
            lambda r: float(k(0.5, r)),
            lambda d: k(0.5, d),
            rho,
            upper=rho + 14.0,
            rtol=1e-7,
        )
        assert conv == pytest.approx(direct, rel=1e-3)

    def test_rejects_nonpositive_time(self):
        with pytest.raises(DomainError):
            heat_kernel_for(3)(0.0, 1.0)


class TestEnvelope:
    def test_n3_value(self):
        # (n-3)/2 = 0: (1+0) * 1 * e^{-1}
        assert heat_envelope(D3, 1.0, 0.0) == pytest.approx(math.exp(-1.0), rel=1e-14)

    def test_n2_value(self):
        # (1+rho)(1+rho+t)^{-1/2} t^{-1} e^{-t/4 - rho/2 - rho^2/4t}
        # at (t, rho) = (1, 0): 2^{-1/2} e^{-1/4}
        assert heat_envelope(D2, 1.0, 0.0) == pytest.approx(
            math.exp(-0.25) / math.sqrt(2.0), rel=1e-14
        )

    def test_ratio_bounded_light_grid(self):
        k = heat_kernel_for(3)
        ratios = []
        for t in np.logspace(-1, 0.5, 5):
            for rho in np.linspace(0.0, 4.0, 5):
                ratios.append(float(k(t, rho)) / float(heat_envelope(D3, t, rho)))
        ratios = np.array(ratios)
        assert ratios.min() > 0.0
        assert ratios.max() / ratios.min() < 50.0


class TestRadialKernelMetadata:
    def test_measured_slopes_on_synthetic_kernel(self):
        k = RadialKernel(
            evaluator=lambda r: r**-2.0 * np.exp(-3.0 * r),
            singular_exponent_at_zero=-2.0,
            decay_rate_at_infinity=(-2.0, 3.0),
            dim=D3,
        )
        assert measured_singular_exponent(k) == pytest.approx(-2.0, rel=0.05)
        p, r = measured_decay(k)
        assert p == pytest.approx(-2.0, rel=0.1)
        assert r == pytest.approx(3.0, rel=0.05)

    def test_heat_kernel_metadata_wrapper(self):
        rk = heat_kernel_for(3).as_radial_kernel(0.7)
        assert rk.singular_exponent_at_zero is None
        assert rk.decay_rate_at_infinity is None
        assert float(rk(1.0)) > 0.0
