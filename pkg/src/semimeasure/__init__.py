"""Exact desk-scale calculus of almost-Gaussian measures on windowed Laurent spaces."""

from .scalar import ONE, SIGMA, ZERO, I, Scalar

__version__ = "0.1.0"

__all__ = ["Scalar", "ZERO", "ONE", "I", "SIGMA", "__version__"]
