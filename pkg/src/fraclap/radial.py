"""Radial test functions with decay and smoothness metadata."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
import sympy as sp

from .exceptions import DomainError


@dataclass(frozen=True)
class DecayClass:
    """Declared far-field behavior of a radial function.

    ``kind`` is one of compact / gaussian / exponential / constant;
    ``support_radius`` bounds where |f| drops below working precision
    (inf for constants); ``rate`` is the exponential rate when relevant.
    """

    kind: str
    support_radius: float
    rate: float = 0.0


@dataclass(frozen=True)
class RadialFunction:
    """Radial function about a base point with metadata used by operators.

    ``smoothness_class`` is the Holder-exponent tag checked against 2*gamma
    by the principal-value route (2.0 tags a C^2-or-better function).
    ``d1``/``d2`` are optional analytic radial derivatives; finite
    differences are substituted when absent.
    """

    evaluator: Callable[[np.ndarray], np.ndarray]
    smoothness_class: float
    decay: DecayClass
    d1: Optional[Callable[[float], float]] = None
    d2: Optional[Callable[[float], float]] = None
    base_point: Optional[np.ndarray] = field(default=None, compare=False)

    def __call__(self, rho):
        return self.evaluator(rho)

    def deriv1(self, rho: float) -> float:
        if self.d1 is not None:
            return float(self.d1(rho))
        h = 1e-5
        return float(self.evaluator(rho + h) - self.evaluator(max(rho - h, 0.0))) / (2 * h)

    def deriv2(self, rho: float) -> float:
        if self.d2 is not None:
            return float(self.d2(rho))
        h = 1e-4
        f = self.evaluator
        return float(f(rho + h) - 2.0 * f(rho) + f(abs(rho - h))) / h**2


def validate_radial_function(f: RadialFunction, probe=(5.0, 6.0, 8.0, 10.0)) -> None:
    """Check finiteness and that the tail respects the declared decay."""
    for rho in probe:
        v = float(f(rho))
        if not math.isfinite(v):
            raise DomainError(f"radial function not finite at rho={rho}")
        d = f.decay
        if d.kind == "compact" and rho > d.support_radius and abs(v) > 1e-14:
            raise DomainError("compact tag violated beyond the support radius")
        if d.kind == "gaussian" and abs(v) > math.exp(-(rho**2) / 2.0) + 1e-14:
            raise DomainError("gaussian tag violated on the tail probe")
        if d.kind == "exponential" and abs(v) > 10.0 * math.exp(-d.rate * rho):
            raise DomainError("exponential tag violated on the tail probe")


def gaussian_function() -> RadialFunction:
    """exp(-rho^2), the standard smooth rapidly decaying test function."""
    f = lambda r: np.exp(-np.asarray(r, dtype=float) ** 2)
    return RadialFunction(
        evaluator=f,
        smoothness_class=2.0,
        decay=DecayClass("gaussian", support_radius=6.5),
        d1=lambda r: -2.0 * r * math.exp(-r * r),
        d2=lambda r: (4.0 * r * r - 2.0) * math.exp(-r * r),
    )


@lru_cache(maxsize=None)
def _bump_callables(radius: float):
    r = sp.symbols("r", nonnegative=True)
    expr = sp.exp(1 - 1 / (1 - (r / radius) ** 2))
    d1 = sp.diff(expr, r)
    d2 = sp.diff(expr, r, 2)
    fs = [sp.lambdify(r, e, modules="numpy") for e in (expr, d1, d2)]
    return tuple(fs)


def bump_function(radius: float = 2.0) -> RadialFunction:
    """Smooth compactly supported bump exp(1 - 1/(1 - (rho/R)^2))."""
    f0, f1, f2 = _bump_callables(radius)

    def guarded(fn):
        def e(rho):
            rho = np.asarray(rho, dtype=float)
            inside = rho < radius * (1.0 - 1e-12)
            safe = np.where(inside, rho, 0.0)
            with np.errstate(all="ignore"):
                vals = fn(safe)
            return np.where(inside, vals, 0.0)

        return e

    return RadialFunction(
        evaluator=guarded(f0),
        smoothness_class=2.0,
        decay=DecayClass("compact", support_radius=radius),
        d1=lambda r: float(guarded(f1)(r)),
        d2=lambda r: float(guarded(f2)(r)),
    )


def constant_function(value: float = 1.0) -> RadialFunction:
    """The constant function, treated as the limit of wide bumps.

    Operators act on it through the exact semigroup invariance of
    constants on stochastically complete spaces.
    """
    return RadialFunction(
        evaluator=lambda r: np.full_like(np.asarray(r, dtype=float), value),
        smoothness_class=2.0,
        decay=DecayClass("constant", support_radius=math.inf),
        d1=lambda r: 0.0,
        d2=lambda r: 0.0,
    )
