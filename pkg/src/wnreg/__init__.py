"""Regularity tools for generalized functionals of Gaussian white noise.

Submodules
----------
chaos      symmetric kernels, chaos elements, Wick calculus, S-transform
bargmann   Monte Carlo / exact Bargmann-Segal projected norms and curves
transport  singular stochastic transport equation: regularity and norms
heat       Feynman-Kac bounds for the stochastic heat equation
cli        the ``wnreg`` batch driver
"""

from __future__ import annotations

__version__ = "0.1.0"
