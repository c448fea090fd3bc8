"""Benchmark problems, reference solutions and data synthesis."""

from .catalog import (CATALOG, DR_PRIORS, AntiderivativeOperator, DiffusionReactionForward,
                      DiffusionReactionInverse, KdV, KraichnanOrszag, Problem, SineRegression,
                      antiderivative_coeffs, antiderivative_data, antiderivative_solution,
                      antiderivative_source, diffusion_reaction_residual, get_problem, kdv_exact,
                      kdv_residual, ko_residual, make_dataset, make_variable)
from .ode import KO_Y0, interpolate, ko_reference, ko_rhs, rk4_solve

__all__ = [
    "CATALOG", "DR_PRIORS", "KO_Y0", "AntiderivativeOperator", "DiffusionReactionForward",
    "DiffusionReactionInverse", "KdV", "KraichnanOrszag", "Problem", "SineRegression",
    "antiderivative_coeffs", "antiderivative_data", "antiderivative_solution",
    "antiderivative_source", "diffusion_reaction_residual", "get_problem", "interpolate",
    "kdv_exact", "kdv_residual", "ko_reference", "ko_residual", "ko_rhs", "make_dataset",
    "make_variable", "rk4_solve",
]
