"""Numerical laboratory for balance conditions, convex minorants and
Lipschitz approximation of integral functionals int f(x, u, u') dx."""

__version__ = "0.1.0"
