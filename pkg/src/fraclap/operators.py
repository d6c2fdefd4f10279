"""Three realizations of the fractional Laplacian on radial functions.

Spectral multiplier (the H^3 oracle, exact through the sinh conjugation
and a discrete sine transform), principal-value singular integral
against the calibrated Bessel-form kernel, and the weighted Neumann
trace of the degenerate-elliptic extension.  Also: the Poisson
extension by both the heat and Fourier routes, the extension energy
constant, and the trace-inequality equality check.

Everything here is a pure function of immutable inputs; grid sweeps may
be parallelized by callers.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from scipy import fft as sfft
from scipy.special import roots_legendre

from .exceptions import DomainError, InstabilityError, SmoothnessError
from .frackernel import FracKernel, build_frac_kernel
from .heat2poisson import ExplicitHyperbolicProvider, poisson_semigroup
from .hyperbolic import HyperbolicDim, sphere_area
from .quadrature import angular_rule, hyperbolic_side, quad_checked
from .radial import (
    DecayClass,
    RadialFunction,
    bump_function,
    constant_function,
    gaussian_function,
    validate_radial_function,
)
from .specfun import (
    FracOrder,
    bessel_k,
    extension_profile,
    extension_profile_deriv,
    frac_order,
    gamma_fn,
    neumann_constant,
)

__all__ = [
    "DecayClass",
    "ExtensionField",
    "QuadratureSpec",
    "RadialFunction",
    "RadialSpectral3",
    "TraceReport",
    "bump_function",
    "constant_function",
    "energy_constant",
    "fourier_extension_field",
    "gaussian_function",
    "heat_extension_field",
    "neumann_limit",
    "poisson_extend",
    "pv_apply",
    "pv_frac",
    "quadratic_form",
    "spectral_frac",
    "trace_energy_check",
    "validate_radial_function",
]


@dataclass(frozen=True)
class QuadratureSpec:
    """Node budgets and cutoffs for the singular-integral route."""

    pv_inner_radius: float = 5e-3
    outer_cutoff: Optional[float] = None  # None: from the function's decay
    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    max_nodes: int = 200
    angular_count: int = 64

    def __post_init__(self):
        if not 0.0 < self.pv_inner_radius < 1.0:
            raise DomainError("pv_inner_radius must lie in (0, 1)")
        if self.abs_tol <= 0.0 or self.rel_tol <= 0.0:
            raise DomainError("tolerances must be positive")


# ---------------------------------------------------------------------------
# Spectral route (n = 3): g = sinh * f, odd extension, sine series.
# ---------------------------------------------------------------------------


class RadialSpectral3:
    """Sine-series calculus for radial functions on H^3.

    With g = sinh(rho) f(rho) extended oddly, radial spectral multipliers
    m(-Delta) act diagonally on the sine coefficients of g with symbol
    m(lam^2 + 1); synthesis at arbitrary rho is exact for the series.
    """

    def __init__(self, f: Callable, *, length: float = 16.0, n_grid: int = 4096):
        self.length = float(length)
        self.n_grid = int(n_grid)
        step = self.length / self.n_grid
        j = np.arange(1, self.n_grid)
        rho_j = j * step
        g = np.sinh(rho_j) * np.asarray(f(rho_j), dtype=float)
        # DST-I: X[k-1] = 2 sum_j g_j sin(pi j k / N); series coefficient
        # c_k = X[k-1] / N reproduces g(rho) = sum c_k sin(lam_k rho)
        self.coef = sfft.dst(g, type=1) / self.n_grid
        self.lam = np.pi * np.arange(1, self.n_grid) / self.length
        keep = np.abs(self.coef) > 1e-18 * np.abs(self.coef).max()
        last = int(np.nonzero(keep)[0].max()) + 1 if keep.any() else 1
        self.coef = self.coef[:last]
        self.lam = self.lam[:last]

    def synthesize(self, coef, rho):
        rho = np.asarray(rho, dtype=float)
        vals = np.sin(np.multiply.outer(rho, self.lam)) @ coef
        return vals / np.sinh(rho)

    def apply_multiplier(self, symbol: Callable):
        return self.coef * symbol(self.lam)

    def pairing(self, coef_a, coef_b) -> float:
        """Integral of u_a u_b dV for series in the conjugated picture."""
        # Parseval on [0, L]: int g_a g_b = (L/2) sum c_a c_b; dV adds 4 pi
        return 4.0 * math.pi * 0.5 * self.length * float(np.dot(coef_a, coef_b))


def _require_oracle_dim(dim: HyperbolicDim):
    if dim.n != 3:
        raise DomainError("the spectral route is the n=3 oracle only")


def spectral_frac(
    dim: HyperbolicDim,
    gamma: float,
    f: RadialFunction,
    rho_eval: float,
    *,
    length: float = 16.0,
    n_grid: int = 4096,
    stability_check: bool = False,
    rel_tol: float = 1e-6,
) -> float:
    """(-Delta)^gamma f at rho_eval via the multiplier (lam^2 + 1)^gamma.

    gamma may be any real (gamma = 0 is the identity).  With
    ``stability_check`` the grid is doubled and the change must stay
    below 10x ``rel_tol``.
    """
    _require_oracle_dim(dim)

    def run(ln, ng):
        calc = RadialSpectral3(f, length=ln, n_grid=ng)
        coef = calc.apply_multiplier(lambda lam: (lam**2 + 1.0) ** gamma)
        return float(calc.synthesize(coef, rho_eval))

    val = run(length, n_grid)
    if stability_check:
        val2 = run(length + 4.0, 2 * n_grid)
        if abs(val2 - val) > 10.0 * rel_tol * max(abs(val), 1e-12):
            raise InstabilityError(
                f"spectral value unstable under grid doubling: {val} vs {val2}"
            )
    return val


def quadratic_form(
    dim: HyperbolicDim, gamma: float, f: RadialFunction, *, upper: float = 12.0
) -> float:
    """Integral of f (-Delta)^gamma f dV on H^3 by radial quadrature."""
    _require_oracle_dim(dim)
    calc = RadialSpectral3(f)
    coef = calc.apply_multiplier(lambda lam: (lam**2 + 1.0) ** gamma)
    x, w = roots_legendre(240)
    r = 0.5 * upper * (x + 1.0)
    wr = 0.5 * upper * w
    tvals = calc.synthesize(coef, r)
    fvals = np.asarray(f(r), dtype=float)
    return float(np.dot(wr, fvals * tvals * 4.0 * math.pi * np.sinh(r) ** 2))


# ---------------------------------------------------------------------------
# Principal-value singular-integral route.
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def frac_kernel_for(n: int, gamma: float) -> FracKernel:
    from .hyperbolic import hyperbolic_dim

    return build_frac_kernel(hyperbolic_dim(n), gamma)


def _hyperbolic_laplacian(f: RadialFunction, n: int, rho: float) -> float:
    if rho < 1e-6:
        return n * f.deriv2(0.0)
    return f.deriv2(rho) + (n - 1) / math.tanh(rho) * f.deriv1(rho)


def pv_apply(
    kernel: FracKernel, f: RadialFunction, rho0: float, spec: QuadratureSpec
) -> float:
    """PV integral of (f(x) - f(x')) against the kernel, about distance rho0.

    Inner ball handled by the second-order Taylor estimate (the odd term
    vanishes by parity), far field beyond the function's support by the
    exact kernel tail mass.
    """
    dim = kernel.dim
    n = dim.n
    r_in = spec.pv_inner_radius
    mu, w_ang = angular_rule(n, spec.angular_count)
    area_factor = sphere_area(n - 1) if n > 2 else 2.0
    f0 = float(f(rho0))

    inner = -(_hyperbolic_laplacian(f, n, rho0) / (2.0 * n)) * kernel.second_moment(
        r_in, rtol=spec.rel_tol
    )

    r_out = spec.outer_cutoff or (rho0 + min(f.decay.support_radius, 40.0) + 1.0)
    area = sphere_area(n)
    nm1 = n - 1

    def integrand(rp):
        d = hyperbolic_side(rp, rho0, mu)
        avg_increment = area_factor * float(np.dot(w_ang, f0 - np.asarray(f(d), dtype=float)))
        return avg_increment * float(kernel(rp)) * math.sinh(rp) ** nm1

    middle = quad_checked(
        integrand, r_in, min(1.0, r_out), atol=spec.abs_tol, rtol=spec.rel_tol,
        limit=spec.max_nodes,
    )
    if r_out > 1.0:
        middle += quad_checked(
            integrand, 1.0, r_out, atol=spec.abs_tol, rtol=spec.rel_tol,
            limit=spec.max_nodes,
        )
    tail = f0 * kernel.tail_mass(r_out, rtol=spec.rel_tol) if f0 != 0.0 else 0.0
    return inner + middle + tail


def pv_frac(
    dim: HyperbolicDim,
    gamma: float,
    f: RadialFunction,
    x_eval,
    spec: Optional[QuadratureSpec] = None,
) -> float:
    """(-Delta)^gamma f by the principal-value route, gamma in (0, 1).

    ``x_eval`` is a geodesic distance from the base point, or a
    hyperboloid point.  Requires smoothness tag > 2*gamma.
    """
    if not 0.0 < gamma < 1.0:
        raise DomainError("pv_frac requires gamma in (0,1)")
    if f.smoothness_class <= 2.0 * gamma:
        raise SmoothnessError(
            f"smoothness tag {f.smoothness_class} insufficient for gamma={gamma}"
        )
    if spec is None:
        spec = QuadratureSpec()
    if np.ndim(x_eval) > 0:
        from .hyperbolic import hyperbolic_distance, radial_point

        rho0 = hyperbolic_distance(radial_point(dim, 0.0), x_eval)
    else:
        rho0 = float(x_eval)
    if f.decay.kind == "constant":
        return 0.0  # increments vanish identically
    kernel = frac_kernel_for(dim.n, gamma)
    return pv_apply(kernel, f, rho0, spec)


# ---------------------------------------------------------------------------
# Poisson extension: heat route (generic) and Fourier route (n = 3).
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _explicit_provider(n: int) -> ExplicitHyperbolicProvider:
    return ExplicitHyperbolicProvider(n)


def poisson_extend(
    dim: HyperbolicDim,
    gamma: float,
    f: RadialFunction,
    rho: float,
    y: float,
    *,
    rtol: float = 1e-9,
) -> float:
    """Extension value u(rho, y) by heat-semigroup subordination."""
    if y < 0.0:
        raise DomainError("poisson_extend requires y >= 0")
    if y == 0.0:
        return float(f(rho))
    return poisson_semigroup(_explicit_provider(dim.n), gamma, f, rho, y, rtol=rtol)


class FourierExtensionField:
    """n=3 extension field with analytic rho- and y-derivatives.

    u(rho, y) = (1/sinh rho) sum c_k profile(mu_k y) sin(lam_k rho) with
    mu_k = sqrt(lam_k^2 + 1); the boundary value at y = 0 is f itself.
    """

    def __init__(self, gamma: float, f: RadialFunction, *, length: float = 16.0,
                 n_grid: int = 4096):
        self.gamma = gamma
        self.boundary = f
        self.calc = RadialSpectral3(f, length=length, n_grid=n_grid)
        self.mu = np.sqrt(self.calc.lam**2 + 1.0)
        self._profile = np.vectorize(lambda s: extension_profile(gamma, s))
        self._dprofile = np.vectorize(
            lambda s: extension_profile_deriv(gamma, s) if s > 0 else math.nan
        )

    def _coef_at(self, y: float):
        if y == 0.0:
            return self.calc.coef
        return self.calc.coef * self._profile(self.mu * y)

    def u(self, rho, y: float):
        return self.calc.synthesize(self._coef_at(y), rho)

    def u_y(self, rho, y: float):
        coef = self.calc.coef * self.mu * self._dprofile(self.mu * y)
        return self.calc.synthesize(coef, rho)

    def u_rho(self, rho, y: float):
        rho = np.asarray(rho, dtype=float)
        coef = self._coef_at(y)
        s = np.sin(np.multiply.outer(rho, self.calc.lam))
        c = np.cos(np.multiply.outer(rho, self.calc.lam))
        num = (c * self.calc.lam) @ coef
        return num / np.sinh(rho) - (s @ coef) * np.cosh(rho) / np.sinh(rho) ** 2


@dataclass(frozen=True)
class ExtensionField:
    """Evaluable extension field u(rho, y) with its boundary data."""

    evaluator: Callable[[float, float], float]
    gamma: FracOrder
    boundary: RadialFunction

    def __call__(self, rho: float, y: float) -> float:
        return float(self.evaluator(rho, y))


def fourier_extension_field(dim: HyperbolicDim, gamma: float, f: RadialFunction) -> ExtensionField:
    _require_oracle_dim(dim)
    field = FourierExtensionField(gamma, f)
    ext = ExtensionField(
        evaluator=lambda rho, y: float(field.u(rho, y)),
        gamma=frac_order(gamma),
        boundary=f,
    )
    object.__setattr__(ext, "fourier", field)
    return ext


def heat_extension_field(
    dim: HyperbolicDim, gamma: float, f: RadialFunction, *, rtol: float = 1e-9
) -> ExtensionField:
    """Extension field built by poisson_extend, memoized per (rho, y)."""
    cache: dict = {}

    def evaluator(rho, y):
        key = (float(rho), float(y))
        if key not in cache:
            cache[key] = poisson_extend(dim, gamma, f, rho, y, rtol=rtol)
        return cache[key]

    return ExtensionField(evaluator=evaluator, gamma=frac_order(gamma), boundary=f)


def neumann_limit(u: ExtensionField, rho: float, *, k_range=range(4, 13)) -> float:
    """-d_gamma lim_{y->0} y^a dy u, by Richardson over y = 2^{-k}.

    Centered differences at step y/16; the pair extrapolation uses the
    known boundary exponent 2 - 2*gamma.  Emits a warning when the
    estimates fail to stabilize.
    """
    gamma = u.gamma.gamma
    a = u.gamma.a
    q = 2.0 - 2.0 * gamma

    def weighted_slope(y):
        h = y / 16.0
        du = (u(rho, y + h) - u(rho, y - h)) / (2.0 * h)
        return y**a * du

    ys = [2.0**-k for k in k_range]
    g = [weighted_slope(y) for y in ys]
    s = 2.0**-q
    rich = [(g[i + 1] - s * g[i]) / (1.0 - s) for i in range(len(g) - 1)]
    diffs = [abs(rich[i + 1] - rich[i]) for i in range(len(rich) - 1)]
    i_best = int(np.argmin(diffs)) + 1
    best = rich[i_best]
    scale = max(abs(best), 1e-12)
    if diffs[i_best - 1] > 0.05 * scale:
        warnings.warn("neumann_limit estimates did not stabilize", stacklevel=2)
    return -neumann_constant(gamma) * best


# ---------------------------------------------------------------------------
# Energy constant and the trace inequality.
# ---------------------------------------------------------------------------


def energy_constant(gamma: float, *, rtol: float = 1e-10) -> float:
    """I[phi] = Int_0^inf (phi^2 + phi'^2) s^a ds; equals 1/d_gamma."""
    if not 0.0 < gamma < 1.0:
        raise DomainError("energy_constant requires gamma in (0,1)")
    a = 1.0 - 2.0 * gamma

    def integrand(s):
        p = extension_profile(gamma, s)
        dp = extension_profile_deriv(gamma, s)
        return (p * p + dp * dp) * s**a

    # endpoint exponents a and 2*gamma - 1 are both integrable
    head = quad_checked(integrand, 0.0, 1.0, atol=1e-13, rtol=rtol, limit=300)
    tail = quad_checked(integrand, 1.0, 60.0, atol=1e-13, rtol=rtol)
    return head + tail


@dataclass(frozen=True)
class TraceReport:
    lhs: float
    rhs: float

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs


def _dirichlet_energy(field: FourierExtensionField, *, rho_upper=14.0, y_upper=6.0,
                      gamma: float = 0.5, count=96) -> float:
    """Weighted energy Int y^a |grad u|^2 dV dy by tensor quadrature.

    The y integral runs in the variable y = v^2, which absorbs the
    y^{2 gamma - 1} boundary behavior of u_y^2 for every gamma.
    """
    a = 1.0 - 2.0 * gamma
    xr, wr = roots_legendre(count)
    rho = 0.5 * rho_upper * (xr + 1.0)
    wrho = 0.5 * rho_upper * wr
    xv, wv = roots_legendre(count)
    v = 0.5 * y_upper * (xv + 1.0)
    wy = 0.5 * y_upper * wv * 2.0 * v  # dy = 2 v dv
    total = 0.0
    for vj, wj in zip(v, wy):
        y = vj * vj
        grad2 = np.asarray(field.u_y(rho, y)) ** 2 + np.asarray(field.u_rho(rho, y)) ** 2
        total += wj * y**a * float(np.dot(wrho, grad2 * 4.0 * math.pi * np.sinh(rho) ** 2))
    return total


def trace_energy_check(
    dim: HyperbolicDim,
    gamma: float,
    f: RadialFunction,
    *,
    perturbation: Optional[Callable] = None,
    count: int = 96,
) -> TraceReport:
    """Weighted Dirichlet energy against d_gamma^{-1} ||f||_{H^gamma}^2.

    The Poisson extension attains ratio 1; a ``perturbation(rho, y)``
    term (vanishing at y = 0) strictly increases the left side.
    """
    _require_oracle_dim(dim)
    field = FourierExtensionField(gamma, f)
    if perturbation is None:
        lhs = _dirichlet_energy(field, gamma=gamma, count=count)
    else:
        lhs = _dirichlet_energy(
            _PerturbedField(field, perturbation), gamma=gamma, count=count
        )
    rhs = quadratic_form(dim, gamma, f) / neumann_constant(gamma)
    return TraceReport(lhs=lhs, rhs=rhs)


class _PerturbedField:
    """Fourier field plus an analytic perturbation delta(rho, y)."""

    def __init__(self, base: FourierExtensionField, delta):
        self.base = base
        self.delta = delta  # callable returning (d, d_rho, d_y)

    def u_y(self, rho, y):
        _, _, dy = self.delta(rho, y)
        return self.base.u_y(rho, y) + dy

    def u_rho(self, rho, y):
        _, dr, _ = self.delta(rho, y)
        return self.base.u_rho(rho, y) + dr


def standard_perturbation(eps: float = 0.3):
    """eps * e^{-rho^2} y^2 e^{-y}: vanishes at y = 0 with its y-slope."""

    def delta(rho, y):
        rho = np.asarray(rho, dtype=float)
        base = eps * np.exp(-(rho**2)) * math.exp(-y)
        return base * y * y, -2.0 * rho * base * y * y, base * (2.0 * y - y * y)

    return delta
