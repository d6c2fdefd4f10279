"""Fractional Laplacians on hyperbolic space and rotationally symmetric manifolds.

Three mutually verifying constructions of (-Laplace)^gamma on H^n --
spectral multiplier, singular-integral convolution against a Bessel-form
kernel, and the degenerate-elliptic extension driven by the heat semigroup
-- together with admissibility machinery for more general noncompact
rotationally symmetric manifolds.
"""

__version__ = "0.1.0"
