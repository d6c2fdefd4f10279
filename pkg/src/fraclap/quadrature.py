"""Quadrature utilities shared across modules.

Thin wrappers over QUADPACK with failure detection, Gauss rules for the
angular factor of geodesic polar coordinates, and tail-completed radial
integrals for integrands with slow power-law decay.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate
from scipy.special import roots_chebyt, roots_gegenbauer, roots_legendre

from .exceptions import QuadratureError


def quad_checked(f, a, b, *, atol=1e-12, rtol=1e-10, limit=200, points=None):
    """scipy.integrate.quad with convergence enforcement."""
    with np.errstate(over="ignore", under="ignore"):
        val, err = integrate.quad(
            f, a, b, epsabs=atol, epsrel=rtol, limit=limit, points=points
        )
    if not math.isfinite(val):
        raise QuadratureError(f"non-finite quadrature value on [{a}, {b}]")
    if err > 10.0 * max(atol, abs(val) * rtol) and err > 1e-9 * max(1.0, abs(val)):
        raise QuadratureError(
            f"quadrature on [{a}, {b}] did not converge: value={val}, err={err}"
        )
    return val


def integrate_radial(f, *, split=40.0, atol=1e-12, rtol=1e-10):
    """Integral of f over (0, inf) allowing slow power-law tails.

    The head [0, split] goes to adaptive quadrature directly; the tail is
    integrated in the variable rho = split * e^v, which turns any
    rho^{-q} (q > 0) decay into clean exponential decay in v.
    """
    head = quad_checked(f, 0.0, split, atol=atol, rtol=rtol)

    def tail_integrand(v):
        rho = split * math.exp(v)
        return f(rho) * rho

    tail = quad_checked(tail_integrand, 0.0, np.inf, atol=atol, rtol=rtol)
    return head + tail


def tail_integral(f, start, *, atol=1e-12, rtol=1e-10):
    """Integral of f over [start, inf) tolerating power-law decay."""

    def integrand(v):
        if v > 690.0:  # any admissible tail has died by start * e^690
            return 0.0
        rho = start * math.exp(v)
        return f(rho) * rho

    return quad_checked(integrand, 0.0, np.inf, atol=atol, rtol=rtol)


def angular_rule(n: int, count: int = 64):
    """Nodes/weights for int_{-1}^{1} F(mu) (1 - mu^2)^{(n-3)/2} dmu.

    This is the polar-angle factor of the sphere S^{n-1}; multiply by the
    area of S^{n-2} to integrate over the full sphere.
    """
    if n < 2:
        raise ValueError("angular rule needs n >= 2")
    if n == 2:
        return roots_chebyt(count)
    if n == 3:
        return roots_legendre(count)
    return roots_gegenbauer(count, (n - 2) / 2.0)


def hyperbolic_side(rho1, rho2, mu):
    """Third side of a hyperbolic triangle: cosh d = ch ch' - sh sh' mu."""
    c = np.cosh(rho1) * np.cosh(rho2) - np.sinh(rho1) * np.sinh(rho2) * mu
    return np.arccosh(np.maximum(c, 1.0))


def richardson_limit(values, steps, exponents):
    """Limit of g(s) as s -> 0 from samples on a geometric ladder.

    ``values[i] = g(steps[i])`` with ``steps`` decreasing geometrically;
    ``exponents`` lists the known correction exponents smallest first.
    Returns the final extrapolated column.
    """
    vals = list(values)
    ratio = steps[1] / steps[0]
    for q in exponents:
        w = ratio**q
        vals = [(vals[i + 1] - w * vals[i]) / (1.0 - w) for i in range(len(vals) - 1)]
        if len(vals) == 1:
            break
    return vals[-1]
