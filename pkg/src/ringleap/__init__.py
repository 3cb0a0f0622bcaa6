"""Leapfrogging coaxial vortex rings: reduced dynamics and PDE solver.

Subpackages
-----------
profiles
    Radial vortex profiles, linearization kernels, quadrature constants,
    and the Fourier-mode elliptic solver.
dynamics
    The reduced Hamiltonian system for scaled ring centers.
fields
    Concentrated ring stream/vorticity fields and the weighted Poisson
    solver on the (r, z) half-plane.
solver
    Semi-Lagrangian integration of the scaled axisymmetric Euler
    equation.
diagnostics
    Ring tracking, speed measurement, and PDE/ODE comparison.
cli
    JSON-configured scenario runner.
"""

from . import diagnostics, dynamics, fields, kernels, profiles, solver

__all__ = ["diagnostics", "dynamics", "fields", "kernels", "profiles",
           "solver"]
__version__ = "0.1.0"
