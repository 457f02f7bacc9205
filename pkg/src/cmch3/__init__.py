"""Constant mean curvature surfaces in hyperbolic 3-space from normalized potentials."""
__version__ = "0.1.0"
