"""Null mean curvature flow of cross sections of shear-free lightcones."""

from .exact import (
    AncientSolution,
    LorentzBoost,
    StcmcParams,
    ancient_area,
    mobius_transform,
    nmcf_from_ancient,
    sphere_solution,
    stcmc_factor,
)
from .flow import (
    FlowConfig,
    FlowSeries,
    FlowState,
    IntegratorError,
    area_law_check,
    predict_tmax,
    rescale_volume_preserving,
    roundness,
    run,
    step,
)
from .geometry import (
    ANTI_DE_SITTER,
    DE_SITTER,
    MINKOWSKI,
    ConformalFactor,
    LightconeModel,
    area,
    cross_section_report,
    scalar_curvature,
    spacetime_mean_curvature,
)
from .kruskal import ClassSModel, KruskalChart, find_horizons, solve_f
from .sphere import ScalarField, SphericalGrid, integrate, laplacian, synthesize_random

__version__ = "0.1.0"
