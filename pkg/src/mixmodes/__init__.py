"""Certified mode counting for lattice Gaussian mixtures.

Builds equally-spaced and variance-constrained Gaussian mixtures,
evaluates their densities at arbitrary precision, and counts their
modes by sign scanning, interval certificates, and cube certificates,
with closed-form error bounds checked along the way.
"""

from .lab import (
    SlopeFit,
    SweepRecord,
    VarianceBoundError,
    bounds_rows,
    fit_slope,
    main,
    records_from_csv,
    records_from_json,
    records_to_csv,
    records_to_json,
    render_svg,
    run_prop1,
    run_prop2,
    run_prop3,
    truncation_rows,
)
from .mixture import (
    BoundBox,
    Mixture,
    default_outer_weight_scale,
    density,
    density_gradient,
    make_faN,
    make_gamma,
    make_Gamma,
    make_lattice_d,
    mixing_variance,
    mixture_from_json,
    mixture_to_json,
)
from .modes import (
    IntervalFamily,
    Method,
    ModeReport,
    certified_lower_bound_1d,
    count_modes_1d,
    count_modes_cube_d,
    dense_grid_oracle,
    lattice_cubes,
    lattice_intervals,
    lipschitz_bound,
)
from .numerics import PrecisionContext, compensated_sum, required_bits
from .theta import (
    CROSSOVER,
    CenterEdgeGap,
    HBounds,
    ThetaSeries,
    h_bounds,
    h_bounds_at,
    h_exact,
    hbar_exact,
    proxy_threshold,
    theta,
    theta_d_center_edge_gap,
    theta_freq,
    theta_space,
    truncated_lattice_gradient_bound,
    truncation_bound,
)

__version__ = "0.1.0"

__all__ = [
    "BoundBox",
    "CROSSOVER",
    "CenterEdgeGap",
    "HBounds",
    "IntervalFamily",
    "Method",
    "Mixture",
    "ModeReport",
    "PrecisionContext",
    "SlopeFit",
    "SweepRecord",
    "ThetaSeries",
    "VarianceBoundError",
    "bounds_rows",
    "certified_lower_bound_1d",
    "compensated_sum",
    "count_modes_1d",
    "count_modes_cube_d",
    "default_outer_weight_scale",
    "dense_grid_oracle",
    "density",
    "density_gradient",
    "fit_slope",
    "h_bounds",
    "h_bounds_at",
    "h_exact",
    "hbar_exact",
    "lattice_cubes",
    "lattice_intervals",
    "lipschitz_bound",
    "main",
    "make_Gamma",
    "make_faN",
    "make_gamma",
    "make_lattice_d",
    "mixing_variance",
    "mixture_from_json",
    "mixture_to_json",
    "proxy_threshold",
    "records_from_csv",
    "records_from_json",
    "records_to_csv",
    "records_to_json",
    "render_svg",
    "required_bits",
    "run_prop1",
    "run_prop2",
    "run_prop3",
    "theta",
    "theta_d_center_edge_gap",
    "theta_freq",
    "theta_space",
    "truncated_lattice_gradient_bound",
    "truncation_bound",
    "truncation_rows",
]
