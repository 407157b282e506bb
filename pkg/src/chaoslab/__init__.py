"""chaoslab: a numerical laboratory for mean-field Gibbs measures.

Exact k-particle marginals of rank-one interacting particle systems,
the one-body fixed-point machinery, Langevin samplers, closed-form
constants for sharp chaos and transport inequalities, and numerical
verification scans.
"""

__version__ = "0.1.0"

from .errors import ChaosLabError

__all__ = ["ChaosLabError", "__version__"]
