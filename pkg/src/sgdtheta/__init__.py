"""Stochastic gradient descent with convex penalty for ill-posed systems."""

__version__ = "0.1.0"
