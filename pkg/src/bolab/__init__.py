"""bolab: a desk-scale numerical laboratory for a quadratic nonlocal
dispersive wave equation, measuring how localized solutions decay in space.

Modules: spectral discretization (grid, cutoffs, spectral), multilinear
frequency-lattice operators and the normal-form branch symbols
(pseudoproduct), time evolution (solver), the approximate-gauge
transformation and its residual verifier (normal_form), localized propagator
kernels (kernels), and the decay-measurement harness (decay).
"""

__version__ = "0.1.0"

from .grid import ComplexField, Field, Grid, Spectrum

__all__ = ["ComplexField", "Field", "Grid", "Spectrum", "__version__"]
