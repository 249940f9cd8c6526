"""Grid-discretized fractional-order modulars with variable exponents."""

from ._core import BACKEND as kernel_backend
from .capacity import (
    BoxSensitivity,
    CapacityProblem,
    CapacityResult,
    box_sensitivity,
    capacity_of,
    decreasing_compacts_test,
    exterior_capacity,
    increasing_sets_test,
    interior_capacity,
    relative_capacity,
    smoothed_capacity_table,
    smoothing_matrix,
    sobolev_capacity,
)
from .exponents import NodeExponent, PairExponent, build_node_exponent, build_pair_exponent
from .grids import Grid, GridFunction, Mask, dilate, grid_from_spec, mask_from_spec
from .lattice import abs_val, clamp01, neg_part, pointwise_max, pointwise_min, pos_part
from .modular import (
    ModularParams,
    ModularValue,
    convergence_equivalence_report,
    doubling_ratio,
    luxemburg_norm,
    modular_gradient,
    modular_value,
    uniform_convexity_probe,
)
from .optimize import OptimizerConfig, SolveResult, brute_force_capacity, solve_pinned_box

__version__ = "0.1.0"
