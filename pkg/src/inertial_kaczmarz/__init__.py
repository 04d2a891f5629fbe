"""Randomized Kaczmarz solvers with inertial extrapolation, plus the tools to study them."""
from .errors import KaczmarzError
from .linalg import DenseMatrix, Hyperplane, project_hyperplane
from .problems import GenSpec, ProblemInstance, generate
from .sampling import RngStream, RowSampler
from .solvers import RunTrace, SolverKind, StopRule, run
from .spectral import RateBounds, SpectralProfile, compute_profile, min_norm_solution, rate_bounds

__version__ = "0.1.0"

__all__ = [
    "DenseMatrix", "GenSpec", "Hyperplane", "KaczmarzError", "ProblemInstance", "RateBounds", "RngStream",
    "RowSampler", "RunTrace", "SolverKind", "SpectralProfile", "StopRule", "compute_profile", "generate",
    "min_norm_solution", "project_hyperplane", "rate_bounds", "run",
]
