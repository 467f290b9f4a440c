"""Numerical toolkit for polynomial correspondences on the complex plane."""

__version__ = "0.1.0"
