"""
Core module for SourceChecker.

Contains the kernels, quadrature, exact solutions, solver, decomposition and
verification logic together with the configuration and error types.
"""

__version__ = "1.0.0"
