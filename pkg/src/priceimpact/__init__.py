"""Continuous-time Nash equilibrium with price impact: shooting solver,
equilibrium quantities, asset-pricing metrics and residual checks."""

__version__ = "0.1.0"

from ._accel import BACKEND, HAVE_NUMBA
from .equilibrium import (BenchmarkEquilibrium, DegenerateImpactError, ImpactCoefficients,
                          NashEquilibrium, impact_coefficients, market_price_of_risk, nash,
                          pareto, radner)
from .params import (ModelParams, ParameterError, calibrated_params, endowment_sd,
                     endowments_from_sd, validate)
from .solver import (BlowUpError, BracketError, ConvergenceError, Mesh, PositivityError,
                     SolutionGrids, SolverError, solve)

__all__ = [
    "BACKEND", "HAVE_NUMBA", "BenchmarkEquilibrium", "DegenerateImpactError",
    "ImpactCoefficients", "NashEquilibrium", "impact_coefficients", "market_price_of_risk",
    "nash", "pareto", "radner", "ModelParams", "ParameterError", "calibrated_params",
    "endowment_sd", "endowments_from_sd", "validate", "BlowUpError", "BracketError",
    "ConvergenceError", "Mesh", "PositivityError", "SolutionGrids", "SolverError", "solve",
]
