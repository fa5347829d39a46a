"""Anisotropic fractional operators on planar domains.

Solver, Hoelder-norm machinery, regularity experiments and numerical checks
of the boundary integral estimates behind interior regularity on convex
domains and its failure on a non-convex one.
"""
from .geometry import Ball, ConvexPolygon, CounterexampleDomain, CuspDomain, Stadium, parse_domain
from .grid import GridFunction
from .operator import apply_L_point, apply_RI_grid, barrier, barrier_constant_1d
from .solver import assemble, solve, solve_problem
from .spectral import SpectralMeasure, ellipticity_lambda, parse_measure

__version__ = "0.1.0"

__all__ = [
    "Ball", "ConvexPolygon", "CounterexampleDomain", "CuspDomain", "Stadium", "parse_domain",
    "GridFunction", "apply_L_point", "apply_RI_grid", "barrier", "barrier_constant_1d",
    "assemble", "solve", "solve_problem", "SpectralMeasure", "ellipticity_lambda",
    "parse_measure",
]
