"""Closed curves of prescribed geodesic curvature on conformally round 2-spheres."""

from .continuation import (
    Branch,
    BranchState,
    ContinuationSchedule,
    Monitors,
    continue_path,
    default_schedule,
    seed_circle,
    two_branch_run,
)
from .curve import (
    DiscreteCurve,
    aligned_distance,
    enclosed_gauss_integral,
    geodesic_curvature,
    length,
    resample_constant_speed,
    self_intersects,
)
from .errors import (
    ConfigError,
    ConvexityError,
    DegenerateCurveError,
    DegenerationError,
    DomainError,
    EmbeddingLossError,
    NonConvergenceError,
    SolverError,
    UndefinedRegionError,
)
from .geometry import ConformalMetric, eval_phi, gauss_curvature, laplace_phi, min_curvature, rotate90
from .harmonics import HarmonicSum, real_sph_harm
from .solver import CurvatureSpec, SolverOptions, jacobian, jacobian_fd, residual, sobolev_field, solve_zero, vector_field
from .verify import Diagnostics, certify, check_gauss_bonnet, check_length_bound, check_reilly_corollary, first_eigenvalue

__version__ = "0.1.0"

__all__ = [
    "Branch",
    "BranchState",
    "ConfigError",
    "ConformalMetric",
    "ContinuationSchedule",
    "ConvexityError",
    "CurvatureSpec",
    "DegenerateCurveError",
    "DegenerationError",
    "Diagnostics",
    "DiscreteCurve",
    "DomainError",
    "EmbeddingLossError",
    "HarmonicSum",
    "Monitors",
    "NonConvergenceError",
    "SolverError",
    "SolverOptions",
    "UndefinedRegionError",
    "aligned_distance",
    "certify",
    "check_gauss_bonnet",
    "check_length_bound",
    "check_reilly_corollary",
    "continue_path",
    "default_schedule",
    "enclosed_gauss_integral",
    "eval_phi",
    "first_eigenvalue",
    "gauss_curvature",
    "geodesic_curvature",
    "jacobian",
    "jacobian_fd",
    "laplace_phi",
    "length",
    "min_curvature",
    "real_sph_harm",
    "resample_constant_speed",
    "residual",
    "rotate90",
    "seed_circle",
    "self_intersects",
    "sobolev_field",
    "solve_zero",
    "two_branch_run",
    "vector_field",
]
