"""Fractional-kernel tests.

The gamma = -3/4 oracle values are the direct spectral integrals
-(1/4 pi^2) Int (lam^2+1)^gamma k_lam(rho) dlam computed independently
with 30-digit oscillatory quadrature (the integral converges absolutely
there), frozen below.
"""

import math

import numpy as np
import pytest

from fraclap.exceptions import CalibrationError, DomainError
from fraclap.frackernel import (
    alpha_fourier,
    alpha_spectral,
    build_frac_kernel,
    calibrate_alpha,
    kernel_table_csv,
)
from fraclap.hyperbolic import hyperbolic_dim, measured_singular_exponent

D2 = hyperbolic_dim(2)
D3 = hyperbolic_dim(3)

# rho -> kernel value at n=3, gamma=-0.75 (convergent-range direct integral)
ORACLE_NEG = {0.5: 0.128442174581327, 1.0: 0.0270428349740945, 2.0: 0.00258411131529981}


class TestClosedFormAgainstDirectIntegral:
    @pytest.mark.parametrize("rho", sorted(ORACLE_NEG))
    def test_convergent_range_oracle(self, rho):
        fk = build_frac_kernel(D3, -0.75)
        assert float(fk(rho)) == pytest.approx(ORACLE_NEG[rho], rel=1e-10)

    def test_alpha_matches_oracle_by_least_squares(self):
        # fitting alpha against the oracle values reproduces the analytic route
        fk = build_frac_kernel(D3, -0.75, alpha=1.0)
        shape = np.array([float(fk(r)) for r in ORACLE_NEG])
        target = np.array([ORACLE_NEG[r] for r in ORACLE_NEG])
        alpha_fit = float(np.dot(shape, target) / np.dot(shape, shape))
        assert alpha_fit == pytest.approx(alpha_fourier(D3, -0.75), rel=1e-10)


class TestCalibration:
    def test_dual_route_agreement(self):
        a = alpha_fourier(D3, 0.5)
        b = alpha_spectral(D3, 0.5)
        assert b == pytest.approx(a, rel=1e-4)

    def test_calibrate_alpha_cross_checks(self):
        assert calibrate_alpha(D3, 0.5) == pytest.approx(alpha_fourier(D3, 0.5), rel=1e-12)

    def test_spectral_route_requires_oracle_dim(self):
        with pytest.raises(CalibrationError):
            alpha_spectral(D2, 0.5)

    def test_smooth_in_gamma_across_minus_half(self):
        # second differences on a 0.05 grid stay below 5% of the value
        # (a branch discontinuity at -1/2 would show at order one)
        gs = np.arange(-0.70, -0.29, 0.05)
        alphas = np.array([alpha_fourier(D3, float(g)) for g in gs])
        second = np.abs(alphas[2:] - 2 * alphas[1:-1] + alphas[:-2])
        assert np.all(second < 0.05 * np.abs(alphas[1:-1]))

    def test_rejects_gamma_outside_range(self):
        with pytest.raises(DomainError):
            build_frac_kernel(D3, 1.2)
        with pytest.raises(DomainError):
            build_frac_kernel(D3, 0.0)


class TestAsymptotics:
    @pytest.mark.parametrize("gamma", [0.25, 0.5, 0.75])
    def test_positive_on_probe_grid(self, gamma):
        fk = build_frac_kernel(D3, gamma)
        vals = fk(np.geomspace(0.05, 10.0, 60))
        assert np.all(vals > 0.0)

    def test_positive_negative_order(self):
        fk = build_frac_kernel(D3, -0.3)
        assert np.all(fk(np.geomspace(0.05, 10.0, 30)) > 0.0)

    @pytest.mark.parametrize("n,gamma", [(3, 0.5), (3, 0.25), (2, 0.3)])
    def test_singular_exponent_near_zero(self, n, gamma):
        dim = hyperbolic_dim(n)
        fk = build_frac_kernel(dim, gamma)
        slope = np.log(float(fk(0.01)) / float(fk(0.005))) / np.log(2.0)
        assert slope == pytest.approx(-(n + 2 * gamma), abs=0.1)

    def test_far_field_decay(self):
        # log ratio between rho=3 and rho=6 consistent with
        # rho^{-1-gamma} e^{-(n-1) rho} within 5%
        gamma = 0.5
        fk = build_frac_kernel(D3, gamma)
        got = math.log(float(fk(3.0)) / float(fk(6.0)))
        predicted = -(1 + gamma) * math.log(0.5) + 2.0 * 3.0
        assert got == pytest.approx(predicted, rel=0.05)

    @pytest.mark.parametrize("gamma", [0.25, 0.5, 0.75])
    def test_rescaled_finite_limit_at_zero(self, gamma):
        fk = build_frac_kernel(D3, gamma)
        vals = [float(fk(10.0**-k)) * (10.0**-k) ** (3 + 2 * gamma) for k in (2, 3, 4)]
        assert vals[0] > 0.0
        for a, b in zip(vals, vals[1:]):
            assert abs(b - a) / a < 0.02

    def test_metadata_matches_measured_slopes(self):
        fk = build_frac_kernel(D3, 0.5)
        measured = measured_singular_exponent(fk.kernel)
        tagged = fk.kernel.singular_exponent_at_zero
        assert abs(measured - tagged) < 0.1 * abs(tagged)


class TestExport:
    def test_csv_table(self):
        fk = build_frac_kernel(D3, 0.5)
        text = kernel_table_csv(fk, [0.5, 1.0])
        lines = text.strip().splitlines()
        assert lines[0] == "# n = 3"
        assert lines[1].startswith("# gamma = ")
        assert lines[2].startswith("# alpha_gamma = ")
        assert "rho,value" in lines
        assert len(lines) == 7

    def test_csv_deterministic(self):
        fk = build_frac_kernel(D3, 0.25)
        rhos = np.geomspace(0.1, 5.0, 7)
        assert kernel_table_csv(fk, rhos) == kernel_table_csv(fk, rhos)
