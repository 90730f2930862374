"""Sampling by dynamic measure transport along a learned tilted path.

The library connects a reference density to a target through the geometric
annealing path, learns an exponential tilting that makes the path traversable
by a velocity field, and integrates particle ensembles along that field.
Velocities and tiltings live in product Matern-5/2 RKHSs and are recovered by
kernel collocation; the nonlinear case is solved with a penalized
Levenberg-Marquardt iteration.
"""

from .densities import GaussianMixture, GeometricPath, QuadratureRule
from .densities import path_expectation, path_normalizer
from .kernels import DerivOrder, Matern52, ProductKernel, matern52_deriv, product_deriv
from .collocation import (
    CollocationSet,
    FeatureMap,
    Functional,
    GramFactor,
    Representer,
    assemble_gram,
    build_grid,
    factor_gram,
    feature_map_g,
    feature_map_u,
)
from .refsolver import ReferenceSolution, eval_reference, solve_reference
from .controlsolver import (
    ControlProblem,
    ControlSolution,
    ControlState,
    LMConfig,
    PenaltyConfig,
    SolveReport,
    tilted_log_unnorm,
)
from .transport import (
    TrajectorySet,
    euler_transport,
    mccann_map,
    mccann_transport,
    mccann_velocity,
)
from .metrics import (
    MetricsReport,
    fraction_left,
    mmd,
    moment_errors,
    spacetime_rkhs_norm,
    spatial_rkhs_norm,
)
from .cli import ExperimentConfig, load_config, main

__version__ = "0.1.0"

__all__ = [
    "GaussianMixture",
    "GeometricPath",
    "QuadratureRule",
    "path_expectation",
    "path_normalizer",
    "DerivOrder",
    "Matern52",
    "ProductKernel",
    "matern52_deriv",
    "product_deriv",
    "CollocationSet",
    "FeatureMap",
    "Functional",
    "GramFactor",
    "Representer",
    "assemble_gram",
    "build_grid",
    "factor_gram",
    "feature_map_g",
    "feature_map_u",
    "ReferenceSolution",
    "eval_reference",
    "solve_reference",
    "ControlProblem",
    "ControlSolution",
    "ControlState",
    "LMConfig",
    "PenaltyConfig",
    "SolveReport",
    "tilted_log_unnorm",
    "TrajectorySet",
    "euler_transport",
    "mccann_map",
    "mccann_transport",
    "mccann_velocity",
    "MetricsReport",
    "fraction_left",
    "mmd",
    "moment_errors",
    "spacetime_rkhs_norm",
    "spatial_rkhs_norm",
    "ExperimentConfig",
    "load_config",
    "main",
    "__version__",
]
