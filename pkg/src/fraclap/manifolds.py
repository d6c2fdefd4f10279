"""Rotationally symmetric manifolds and admissibility machinery.

Warping profiles phi with exact symbolic derivatives (from a small
expression grammar), explicit curvature and Ricci formulas, the
boundedness ratios governing heat-kernel control, ball volumes with the
constant-curvature comparison, the flat-Laplacian conjugation weight
and potential, a conservative Crank-Nicolson solver for the radial heat
kernel, and the admissibility rules for geometrically finite hyperbolic
quotients.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
import sympy as sp
from scipy.interpolate import InterpolatedUnivariateSpline, RegularGridInterpolator
from scipy.linalg import solve_banded
from sympy.parsing.sympy_parser import parse_expr, standard_transformations

from .exceptions import ConfigError, DomainError, MassLeakError, ProfileError
from .hyperbolic import sphere_area
from .quadrature import quad_checked

__all__ = [
    "AdmissibilityVerdict",
    "CurvatureSample",
    "GeomFiniteVerdict",
    "GroupDescriptor",
    "RadialHeatSolution",
    "RotSymProfile",
    "SolvedProfileProvider",
    "admissibility_ratios",
    "ball_volume",
    "conjugated_apply",
    "conjugation_potential",
    "curvature",
    "euclidean_profile",
    "hyperbolic_profile",
    "is_admissible_geomfinite",
    "is_admissible_rotsym",
    "laplacian_radial",
    "model_ball_volume",
    "profile_from_config",
    "profile_from_expression",
    "provider_from_solution",
    "radial_heat_solve",
    "validate_profile",
]


@dataclass(frozen=True)
class RotSymProfile:
    """Warping profile phi of the metric dr^2 + phi(r)^2 dw^2."""

    name: str
    n: int
    phi: Callable[[np.ndarray], np.ndarray]
    dphi: Callable[[np.ndarray], np.ndarray]
    ddphi: Callable[[np.ndarray], np.ndarray]


def validate_profile(profile: RotSymProfile, *, probes=(0.5, 1.0, 2.0, 5.0)) -> None:
    """Smoothness-at-the-pole and positivity requirements.

    phi(0) = 0 and phi'(0) = 1 within 1e-9, phi''(0) = 0 (even
    derivatives at the pole must vanish; profiles like r + b r^2 are
    rejected), phi > 0 away from 0, and the supplied derivatives must
    be finite-difference consistent.
    """
    if abs(float(profile.phi(0.0))) > 1e-9:
        raise ProfileError("phi(0) must vanish")
    if abs(float(profile.dphi(0.0)) - 1.0) > 1e-9:
        raise ProfileError("phi'(0) must equal 1")
    if abs(float(profile.ddphi(0.0))) > 1e-7:
        raise ProfileError("phi''(0) must vanish for a smooth pole")
    h = 1e-4
    for r in probes:
        if float(profile.phi(r)) <= 0.0:
            raise ProfileError(f"phi must be positive at r={r}")
        fd1 = (float(profile.phi(r + h)) - float(profile.phi(r - h))) / (2 * h)
        fd2 = (
            float(profile.phi(r + h)) - 2 * float(profile.phi(r)) + float(profile.phi(r - h))
        ) / h**2
        scale = max(abs(float(profile.phi(r))), 1.0)
        if abs(fd1 - float(profile.dphi(r))) > 1e-5 * scale:
            raise ProfileError(f"dphi inconsistent with phi at r={r}")
        if abs(fd2 - float(profile.ddphi(r))) > 1e-4 * scale:
            raise ProfileError(f"ddphi inconsistent with phi at r={r}")


_GRAMMAR_LOCALS = {"sinh": sp.sinh, "cosh": sp.cosh, "exp": sp.exp}
_GRAMMAR_GLOBALS = {
    "Integer": sp.Integer,
    "Float": sp.Float,
    "Rational": sp.Rational,
    "Symbol": sp.Symbol,
}


def profile_from_expression(name: str, n: int, expression: str) -> RotSymProfile:
    """Build a profile from the expression grammar.

    Allowed: polynomials in r, sinh, cosh, exp, sums/products/quotients.
    Derivatives are exact (symbolic).
    """
    r = sp.Symbol("r")
    try:
        expr = parse_expr(
            expression,
            local_dict={**_GRAMMAR_LOCALS, "r": r},
            global_dict=_GRAMMAR_GLOBALS,
            transformations=standard_transformations,
        )
    except Exception as exc:
        raise ConfigError(f"cannot parse profile expression {expression!r}: {exc}") from None
    if not expr.free_symbols <= {r}:
        raise ConfigError(f"profile may only depend on r, got {expr.free_symbols}")
    bad = [f.func for f in expr.atoms(sp.Function) if f.func not in (sp.sinh, sp.cosh, sp.exp)]
    if bad:
        raise ConfigError(f"functions outside the grammar: {bad}")
    d1 = sp.diff(expr, r)
    d2 = sp.diff(expr, r, 2)
    fns = [sp.lambdify(r, e, modules="numpy") for e in (expr, d1, d2)]
    profile = RotSymProfile(name=name, n=int(n), phi=fns[0], dphi=fns[1], ddphi=fns[2])
    validate_profile(profile)
    return profile


def profile_from_config(source) -> RotSymProfile:
    """Profile from a config mapping or JSON file: {name, n, phi}."""
    if isinstance(source, (str,)):
        with open(source, "r", encoding="utf-8") as fh:
            source = json.load(fh)
    try:
        return profile_from_expression(source["name"], int(source["n"]), source["phi"])
    except KeyError as exc:
        raise ConfigError(f"profile config missing key {exc}") from None


def hyperbolic_profile(n: int = 3) -> RotSymProfile:
    return profile_from_expression("hyperbolic", n, "sinh(r)")


def euclidean_profile(n: int = 3) -> RotSymProfile:
    return profile_from_expression("euclidean", n, "r")


# ---------------------------------------------------------------------------
# Curvature, ratios, volumes, conjugation.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CurvatureSample:
    """Sectional and Ricci curvature eigenvalues at radius r."""

    r: float
    sectional_radial: float
    sectional_tangential: float
    ricci_radial: float
    ricci_tangential: float


def curvature(profile: RotSymProfile, r: float) -> CurvatureSample:
    """K_rad = -phi''/phi, K_tan = -((phi')^2 - 1)/phi^2, with Ricci traces."""
    if r <= 0.0:
        raise DomainError("curvature requires r > 0")
    p = float(profile.phi(r))
    dp = float(profile.dphi(r))
    ddp = float(profile.ddphi(r))
    sec_rad = -ddp / p
    sec_tan = -(dp * dp - 1.0) / (p * p)
    n = profile.n
    return CurvatureSample(
        r=r,
        sectional_radial=sec_rad,
        sectional_tangential=sec_tan,
        ricci_radial=(n - 1) * sec_rad,
        ricci_tangential=(n - 2) * sec_tan + sec_rad,
    )


def admissibility_ratios(profile: RotSymProfile, r: float):
    """(f1, f2) = (phi''/phi, (n-2)((phi')^2-1)/phi^2 + phi''/phi)."""
    if r <= 0.0:
        raise DomainError("ratios require r > 0")
    p = float(profile.phi(r))
    dp = float(profile.dphi(r))
    ddp = float(profile.ddphi(r))
    f1 = ddp / p
    f2 = (profile.n - 2) * (dp * dp - 1.0) / (p * p) + f1
    return f1, f2


@dataclass(frozen=True)
class AdmissibilityVerdict:
    admissible: bool
    sup_f1: float
    sup_f2: float
    tail_slope_f1: float
    tail_slope_f2: float


def _tail_slope(r: np.ndarray, vals: np.ndarray) -> float:
    mask = r >= r[-1] / 10.0
    v = np.abs(vals[mask])
    if np.all(v < 1e-10):
        return 0.0
    return float(np.polyfit(np.log(r[mask]), np.log(np.maximum(v, 1e-300)), 1)[0])


def is_admissible_rotsym(
    profile: RotSymProfile, r_grid: Optional[np.ndarray] = None
) -> AdmissibilityVerdict:
    """Uniform upper-boundedness of f1, f2 sampled on a grid.

    The grid covers (0, R] densely near 0; the large-r trend is judged
    by the log-log slope of the last decade (growth means inadmissible).
    """
    if r_grid is None:
        r_grid = np.concatenate([np.geomspace(1e-3, 1.0, 40), np.linspace(1.2, 30.0, 60)])
    with np.errstate(all="ignore"):
        vals = np.array([admissibility_ratios(profile, float(r)) for r in r_grid])
        f1, f2 = vals[:, 0], vals[:, 1]
        finite = bool(np.all(np.isfinite(vals)))
        s1 = _tail_slope(r_grid, f1) if finite else math.inf
        s2 = _tail_slope(r_grid, f2) if finite else math.inf
    admissible = finite and s1 <= 0.05 and s2 <= 0.05
    return AdmissibilityVerdict(
        admissible=admissible,
        sup_f1=float(np.max(f1)) if finite else math.inf,
        sup_f2=float(np.max(f2)) if finite else math.inf,
        tail_slope_f1=s1,
        tail_slope_f2=s2,
    )


def ball_volume(profile: RotSymProfile, radius: float, *, rtol: float = 1e-10) -> float:
    """|B(R)| = area(S^{n-1}) * Int_0^R phi^{n-1}."""
    if radius <= 0.0:
        raise DomainError("ball_volume requires R > 0")
    n = profile.n
    return sphere_area(n) * quad_checked(
        lambda s: float(profile.phi(s)) ** (n - 1), 0.0, radius, atol=1e-13, rtol=rtol
    )


def model_ball_volume(beta: float, n: int, radius: float) -> float:
    """Ball volume in the constant -beta^2 curvature space form."""
    if beta == 0.0:
        integrand = lambda s: s ** (n - 1)
    else:
        integrand = lambda s: (math.sinh(beta * s) / beta) ** (n - 1)
    return sphere_area(n) * quad_checked(integrand, 0.0, radius, atol=1e-13, rtol=1e-10)


def conjugation_potential(profile: RotSymProfile, r: float):
    """Weight w = (r/phi)^{(n-1)/2} and potential V of the conjugation.

    Delta_M h = w L (w^{-1} h) with L = d_rr + ((n-1)/r) d_r - V acting on
    radial functions; V = (n-1)/2 phi''/phi - (n-1)(n-3)/4 ((phi'/phi)^2 - 1/r^2).
    """
    if r <= 0.0:
        raise DomainError("conjugation requires r > 0")
    n = profile.n
    p = float(profile.phi(r))
    w = (r / p) ** ((n - 1) / 2.0)
    dp = float(profile.dphi(r))
    ddp = float(profile.ddphi(r))
    v = (n - 1) / 2.0 * ddp / p - (n - 1) * (n - 3) / 4.0 * ((dp / p) ** 2 - 1.0 / r**2)
    return w, v


def laplacian_radial(profile: RotSymProfile, h: Callable, r: float, *, step=1e-4) -> float:
    """Radial Laplace-Beltrami h'' + (n-1)(phi'/phi) h' by differences."""
    d1 = (h(r + step) - h(r - step)) / (2 * step)
    d2 = (h(r + step) - 2.0 * h(r) + h(r - step)) / step**2
    drift = (profile.n - 1) * float(profile.dphi(r)) / float(profile.phi(r))
    return d2 + drift * d1


def conjugated_apply(profile: RotSymProfile, h: Callable, r: float, *, step=1e-4) -> float:
    """w L (w^{-1} h) at r, with L = d_rr + ((n-1)/r) d_r - V.

    The drift enters with a plus sign (the conjugation maps the radial
    Laplacian to the flat one minus the potential V).
    """
    n = profile.n

    def g(s):
        w_s = (s / float(profile.phi(s))) ** ((n - 1) / 2.0)
        return h(s) / w_s

    d1 = (g(r + step) - g(r - step)) / (2 * step)
    d2 = (g(r + step) - 2.0 * g(r) + g(r - step)) / step**2
    w, v = conjugation_potential(profile, r)
    return w * (d2 + (n - 1) / r * d1 - v * g(r))


# ---------------------------------------------------------------------------
# Radial heat solver (conservative Crank-Nicolson finite volumes).
# ---------------------------------------------------------------------------


@dataclass
class RadialHeatSolution:
    """Radial heat kernel snapshots from the finite-volume solve.

    ``values[i, j]`` is p_{t_i}(r_j) on cell centers ``r``; ``on_diag``
    is the densely recorded extrapolated pole value along the solver
    path ``on_diag_t``; ``mass`` is the volume-weighted total at the
    snapshot times; ``bootstrap_delta`` is the maximal relative change
    of the final snapshot under halving the bootstrap time.
    """

    profile: RotSymProfile
    n: int
    r: np.ndarray
    t: np.ndarray
    values: np.ndarray
    on_diag_t: np.ndarray
    on_diag: np.ndarray
    mass: np.ndarray
    bootstrap_delta: float

    def kernel_at(self, t: float, rho) -> np.ndarray:
        """Interpolated kernel value; 0 beyond the stored time range."""
        rho = np.asarray(rho, dtype=float)
        if t > self.t[-1] * (1.0 + 1e-12):
            return np.zeros_like(rho)
        t = min(max(t, self.t[0]), self.t[-1])
        pts = np.column_stack(
            [np.full(rho.size, math.log(t)), np.clip(rho.ravel(), self.r[0], self.r[-1])]
        )
        vals = self._interp(pts).reshape(rho.shape)
        return np.maximum(vals, 0.0)

    def on_diag_at(self, t: float) -> float:
        return math.exp(float(self._diag_spline(math.log(t))))

    def __post_init__(self):
        self._interp = RegularGridInterpolator(
            (np.log(self.t), self.r), self.values, method="cubic", bounds_error=False,
            fill_value=None,
        )
        good = self.on_diag > 0.0
        self._diag_spline = InterpolatedUnivariateSpline(
            np.log(self.on_diag_t[good]), np.log(self.on_diag[good]), k=3
        )

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# profile = {self.profile.name}\n")
        buf.write(f"# n = {self.n}\n")
        buf.write("t,r,value\n")
        for i, ti in enumerate(self.t):
            for j, rj in enumerate(self.r):
                buf.write(f"{ti!r},{rj!r},{self.values[i, j]!r}\n")
        return buf.getvalue()


def _bootstrap_state(profile: RotSymProfile, n: int, r: np.ndarray, t0: float) -> np.ndarray:
    """Euclidean Gaussian at t0 with the Jacobian-density correction."""
    phi = np.asarray(profile.phi(r), dtype=float)
    w = (r / phi) ** ((n - 1) / 2.0)
    return w * (4.0 * math.pi * t0) ** (-n / 2.0) * np.exp(-(r**2) / (4.0 * t0))


def radial_heat_solve(
    profile: RotSymProfile,
    n: int,
    t_end: float,
    *,
    dr: float = 0.0025,
    t0: float = 1e-3,
    r_max: Optional[float] = None,
    snapshot_times: Optional[Sequence[float]] = None,
    dt_divisor: float = 60.0,
    bootstrap_check: bool = False,
) -> RadialHeatSolution:
    """Solve dp/dt = phi^{1-n} d_r (phi^{n-1} d_r p) from a short-time
    Gaussian bootstrap at t0, reflecting at r = 0, absorbing at r_max.

    Conservative finite volumes keep the volume-weighted mass exact up
    to the boundary leak; the initial state is normalized to unit mass.
    Raises :class:`MassLeakError` when more than 1% of the mass escapes
    (domain truncated too small).
    """
    if t_end <= t0:
        raise DomainError("t_end must exceed the bootstrap time")
    verdict = is_admissible_rotsym(profile)
    if not verdict.admissible:
        raise ProfileError("profile is not admissible; refusing to solve")
    if r_max is None:
        drift_sup = max(
            float(profile.dphi(s)) / float(profile.phi(s)) for s in np.linspace(1.0, 20.0, 40)
        )
        r_max = 6.0 * math.sqrt(t_end) + 3.0 * t_end * drift_sup * max(1.0, (n - 1) / 2.0) + 4.0

    area = sphere_area(n)
    n_cells = int(round(r_max / dr))
    centers = (np.arange(n_cells) + 0.5) * dr
    faces = np.arange(n_cells + 1) * dr
    phi_c = np.asarray(profile.phi(centers), dtype=float)
    vol = phi_c ** (n - 1) * dr
    a_face = np.asarray(profile.phi(faces), dtype=float) ** (n - 1)
    a_face[0] = 0.0  # no flux through the pole

    lower = a_face[1:-1] / (vol[1:] * dr)
    upper = a_face[1:-1] / (vol[:-1] * dr)
    diag = np.empty(n_cells)
    diag[:-1] = -a_face[1:-1] / (vol[:-1] * dr)
    diag[-1] = 0.0
    diag[1:] -= a_face[1:-1] / (vol[1:] * dr)
    diag[-1] -= 2.0 * a_face[-1] / (vol[-1] * dr)  # absorbing wall

    def march(t_start: float, state: np.ndarray, record):
        t = t_start
        snaps_left = sorted(s for s in record if s > t_start)
        out = {}
        diag_path = [(t, state)]
        while t < t_end - 1e-14:
            dt = max(t / dt_divisor, t0 / dt_divisor)
            for s in snaps_left:
                if t < s:
                    dt = min(dt, s - t)
                    break
            dt = min(dt, t_end - t)
            # Crank-Nicolson banded solve
            ab = np.zeros((3, n_cells))
            ab[0, 1:] = -0.5 * dt * upper
            ab[1, :] = 1.0 - 0.5 * dt * diag
            ab[2, :-1] = -0.5 * dt * lower
            rhs = state + 0.5 * dt * (
                diag * state
                + np.concatenate([[0.0], lower * state[:-1]])
                + np.concatenate([upper * state[1:], [0.0]])
            )
            state = solve_banded((1, 1), ab, rhs)
            t += dt
            diag_path.append((t, state))
            if snaps_left and abs(t - snaps_left[0]) < 1e-12:
                out[snaps_left.pop(0)] = state.copy()
        return out, diag_path

    def pole_value(state):
        r0, r1 = centers[0], centers[1]
        return float((state[0] * r1**2 - state[1] * r0**2) / (r1**2 - r0**2))

    if snapshot_times is None:
        snapshot_times = np.geomspace(max(2 * t0, 5e-3), t_end, 60)
    snapshot_times = sorted(set(float(s) for s in snapshot_times) | {float(t_end)})

    init = _bootstrap_state(profile, n, centers, t0)
    init /= area * float(np.dot(init, vol))
    snaps, diag_path = march(t0, init.copy(), snapshot_times)

    bootstrap_delta = 0.0
    if bootstrap_check:
        init2 = _bootstrap_state(profile, n, centers, t0 / 2.0)
        init2 /= area * float(np.dot(init2, vol))
        snaps2, _ = march(t0 / 2.0, init2, [t_end])
        f1, f2 = snaps[t_end], snaps2[t_end]
        sel = f1 > 1e-8 * f1.max()
        bootstrap_delta = float(np.max(np.abs(f1[sel] - f2[sel]) / f1[sel]))

    t_arr = np.array(sorted(snaps))
    values = np.vstack([snaps[t] for t in t_arr])
    mass = area * values @ vol
    if mass[-1] < 0.99:
        raise MassLeakError(f"mass {mass[-1]:.4f} at t_end; enlarge r_max")
    on_diag_t = np.array([t for t, _ in diag_path])
    on_diag = np.array([pole_value(s) for _, s in diag_path])
    return RadialHeatSolution(
        profile=profile,
        n=n,
        r=centers,
        t=t_arr,
        values=values,
        on_diag_t=on_diag_t,
        on_diag=on_diag,
        mass=mass,
        bootstrap_delta=bootstrap_delta,
    )


class SolvedProfileProvider:
    """Heat-kernel provider wrapping a finite-volume solution."""

    def __init__(self, solution: RadialHeatSolution, lambda1: float = 0.0):
        self.n = solution.n
        self.lambda1 = lambda1
        self.mass_preserving = True
        self.solution = solution
        self._area = sphere_area(solution.n)
        prof = solution.profile
        self._phi = prof.phi
        self._dphi = prof.dphi

    def kernel(self, t, rho):
        sol = self.solution
        if t < sol.t[0]:
            rho = np.asarray(rho, dtype=float)
            state = _bootstrap_state(sol.profile, sol.n, np.maximum(rho, 1e-9), t)
            return state
        return sol.kernel_at(t, rho)

    def on_diag(self, t):
        sol = self.solution
        if t < sol.on_diag_t[0]:
            return (4.0 * math.pi * t) ** (-sol.n / 2.0)
        if t > sol.on_diag_t[-1]:
            return 0.0
        return sol.on_diag_at(t)

    def volume_density(self, rho):
        rho = np.asarray(rho, dtype=float)
        return self._area * np.asarray(self._phi(rho), dtype=float) ** (self.n - 1)

    def drift(self, rho):
        return (self.n - 1) * float(self._dphi(rho)) / float(self._phi(rho))


def provider_from_solution(solution: RadialHeatSolution, lambda1: float = 0.0):
    return SolvedProfileProvider(solution, lambda1)


# ---------------------------------------------------------------------------
# Geometrically finite hyperbolic quotients.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GroupDescriptor:
    """Inputs describing a geometrically finite quotient of H^n.

    ``delta`` is the convergence exponent of the group's orbital series
    (in [0, n-1]); ``cusp_ranks`` lists the ranks of cusp neighborhoods.
    """

    n: int
    delta: float
    cusp_ranks: tuple
    has_maximal_cusp: bool = False

    def __post_init__(self):
        if not 0.0 <= self.delta <= self.n - 1:
            raise DomainError("delta must lie in [0, n-1]")
        for r in self.cusp_ranks:
            if not 1 <= r <= self.n - 1:
                raise DomainError("cusp ranks must lie in [1, n-1]")


@dataclass(frozen=True)
class GeomFiniteVerdict:
    admissible: bool
    rule: str  # "i" | "ii" | "convex_cocompact" | "none"


def is_admissible_geomfinite(g: GroupDescriptor) -> GeomFiniteVerdict:
    """Sufficient conditions for good heat-kernel sup bounds.

    Cusp-free quotients qualify outright; otherwise rule i requires
    delta < (n-1)/2, all ranks < n-1 and no maximal cusp, and rule ii
    (for delta = (n-1)/2 + beta/2, beta in [0, n-1)) requires every
    rank < (n-1)^2 - beta^2.
    """
    n = g.n
    if not g.cusp_ranks and not g.has_maximal_cusp:
        return GeomFiniteVerdict(True, "convex_cocompact")
    half = (n - 1) / 2.0
    if g.delta < half and all(r < n - 1 for r in g.cusp_ranks) and not g.has_maximal_cusp:
        return GeomFiniteVerdict(True, "i")
    if g.delta >= half:
        beta = 2.0 * g.delta - (n - 1)
        if beta < n - 1 and all(r < (n - 1) ** 2 - beta**2 for r in g.cusp_ranks):
            return GeomFiniteVerdict(True, "ii")
    return GeomFiniteVerdict(False, "none")
