"""Geometric Lorenz attractor: flow, return map, hyperbolicity, manifolds, and specification searches."""

__version__ = "0.1.0"
