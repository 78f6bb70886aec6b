"""Scalar conservation laws seen three ways: Eulerian finite volumes, Lagrangian
flow maps obtained from a Temple system, and extremals of an action functional.

Modules
-------
flux        normalization, velocity law, action potential
eulerian    Godunov solver and exact Riemann solutions
temple      stretch/density system for the flow map
flowmap     flow-map reconstruction, inversion, Lagrangian density
variational discrete action, first variation, conserved quantity
systems     gas dynamics and nonlinear wave equation in map form
scenario    JSON scenarios and pipelines behind the ``lagrangeflow`` command
"""
from .errors import LagrangeFlowError

__version__ = "0.1.0"

__all__ = ["LagrangeFlowError", "__version__"]
