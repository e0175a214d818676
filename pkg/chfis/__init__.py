"""
CHFIS
-----

Coalescence hidden-variable fractal interpolation surfaces: construction from generalized
interpolation data, evaluation, and stability under perturbations of that data.

:license: MIT, see LICENSE for more details.
"""

__title__ = "chfis"
__description__ = "Coalescence hidden-variable fractal interpolation surfaces and their stability."
__version__ = "0.1.0"
__license__ = "MIT"


from .core import (
    CellCoefficients,
    GeneralizedDataset,
    IfsParameters,
    Point2,
    manhattan_distance,
    validate_dataset,
    validate_parameters,
)
from .engine import (
    IfsModel,
    PointEstimate,
    SurfaceGrid,
    build_model,
    eval_point,
    eval_points,
    eval_pq,
    iterate_surface,
    solve_surface,
    verify_joinup,
)
from .errors import ChfisError
from .formats import parse_dataset, read_grid_csv, write_dataset, write_grid_csv, write_heightmap_pgm
from .holder import HolderEstimate, estimate_holder
from .hook import Hook
from .samples import SAMPLE_NAMES, load_sample
from .spec import CampaignSpec, SolverSpec, StabilityConfig
from .stability import (
    RescaleMap,
    StabilityReport,
    bound_dependent,
    bound_hidden,
    bound_hidden_surface,
    bound_independent,
    build_rescale,
    check_ratio_invariance,
    direct_sup_diff,
    empirical_sup_diff,
    generate_perturbation,
    perturbation_metric,
    run_campaign,
    stability_bounds,
    verify_stability,
)

__all__ = [
    "CampaignSpec",
    "CellCoefficients",
    "ChfisError",
    "GeneralizedDataset",
    "HolderEstimate",
    "Hook",
    "IfsModel",
    "IfsParameters",
    "Point2",
    "PointEstimate",
    "RescaleMap",
    "SAMPLE_NAMES",
    "SolverSpec",
    "StabilityConfig",
    "StabilityReport",
    "SurfaceGrid",
    "bound_dependent",
    "bound_hidden",
    "bound_hidden_surface",
    "bound_independent",
    "build_model",
    "build_rescale",
    "check_ratio_invariance",
    "direct_sup_diff",
    "empirical_sup_diff",
    "estimate_holder",
    "eval_point",
    "eval_points",
    "eval_pq",
    "generate_perturbation",
    "iterate_surface",
    "load_sample",
    "manhattan_distance",
    "parse_dataset",
    "perturbation_metric",
    "read_grid_csv",
    "run_campaign",
    "solve_surface",
    "stability_bounds",
    "validate_dataset",
    "validate_parameters",
    "verify_joinup",
    "verify_stability",
    "write_dataset",
    "write_grid_csv",
    "write_heightmap_pgm",
]
