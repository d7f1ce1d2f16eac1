"""Perpetual American put pricing with asset-dependent discounting.

The asset follows a geometric spectrally negative Levy process (Brownian
motion with drift minus compound Poisson exponential jumps).  Prices are
assembled from omega-scale functions computed by high-order Taylor
integration, closed forms (Kummer / Bessel) and a Volterra solver.
"""

from .levy_model import ModelParams, RootSet, laplace_exponent, laplace_exponent_deriv, psi_roots, tilt
from .scale_classic import QScalePair

__all__ = [
    "ModelParams",
    "RootSet",
    "QScalePair",
    "laplace_exponent",
    "laplace_exponent_deriv",
    "psi_roots",
    "tilt",
]

__version__ = "0.1.0"
