"""grainflow: curvature-driven interface flow with a coupled orientation scalar.

A periodic graph u(x, t) on [0, 1) evolves by weighted curve shortening while
a scalar alpha(t) relaxes the line-energy density sigma(alpha); the product
E = sigma(alpha) * length(u) is a Lyapunov functional.  The package provides
spectral grid calculus, the density models, the energy and its derivatives,
an RK4 evolver with dense diagnostics, and analysis tools that verify the
dissipation identity, a gradient (Lojasiewicz-type) inequality, stability and
length estimates, and a battery of standalone analytic inequalities.
"""

from .analysis import (
    DecayReport,
    LengthReport,
    LsFit,
    StabilityReport,
    c5_from_fit,
    decay_classifier,
    fit_ls_exponent,
    length_estimate_check,
    ls_samples,
    predicted_limit,
    stability_check,
    verify_ls_inequality,
)
from .config import ConfigError, ScenarioConfig, config_from_dict, parse_config
from .energy import (
    EnergyGradient,
    critical_manifold_check,
    energy,
    energy_gap,
    frechet_derivative,
    gateaux_second_derivative,
    gradient_x_norm,
    gradient_y_norm,
    length,
    length_excess,
)
from .flow import (
    BlowUpError,
    CflViolation,
    Diagnostics,
    FlowParams,
    GradientBoundReport,
    State,
    Trajectory,
    cfl_bound,
    check_cfl,
    dissipation_budget,
    dissipation_residual,
    evolve,
    gradient_bound_check,
    max_interior_residual,
    rhs,
    snapshots_to_json,
    stability_band,
    step,
    to_csv,
)
from .grid import (
    GridFunction,
    XVector,
    antiderivative,
    derivative,
    grid_points,
    integrate,
    make_grid_function,
    random_band_limited,
    second_derivative,
    x_norm,
    y_norm,
)
from .inequalities import (
    CheckResult,
    gradient_sup_embedding,
    lipschitz_bounds,
    norm_ordering,
    periodic_poincare,
    run_all,
    sup_minus_mean_embedding,
    sup_x_embedding,
)
from .runner import run_scenario, verify_suite
from .sigma import (
    ALL_CRITICAL,
    Constant,
    CriticalPoint,
    QuadraticConvex,
    SigmaModel,
    TrigPeriodic,
    find_critical_points,
    sigma_from_json_dict,
)

__version__ = "0.1.0"

__all__ = [
    "ALL_CRITICAL",
    "BlowUpError",
    "CflViolation",
    "CheckResult",
    "ConfigError",
    "Constant",
    "CriticalPoint",
    "DecayReport",
    "Diagnostics",
    "EnergyGradient",
    "FlowParams",
    "GradientBoundReport",
    "GridFunction",
    "LengthReport",
    "LsFit",
    "QuadraticConvex",
    "ScenarioConfig",
    "SigmaModel",
    "StabilityReport",
    "State",
    "Trajectory",
    "TrigPeriodic",
    "XVector",
    "antiderivative",
    "c5_from_fit",
    "cfl_bound",
    "check_cfl",
    "config_from_dict",
    "critical_manifold_check",
    "decay_classifier",
    "derivative",
    "dissipation_budget",
    "dissipation_residual",
    "energy",
    "energy_gap",
    "evolve",
    "find_critical_points",
    "fit_ls_exponent",
    "frechet_derivative",
    "gateaux_second_derivative",
    "gradient_bound_check",
    "gradient_sup_embedding",
    "gradient_x_norm",
    "gradient_y_norm",
    "grid_points",
    "integrate",
    "length",
    "length_estimate_check",
    "length_excess",
    "lipschitz_bounds",
    "ls_samples",
    "make_grid_function",
    "max_interior_residual",
    "norm_ordering",
    "parse_config",
    "periodic_poincare",
    "predicted_limit",
    "random_band_limited",
    "rhs",
    "run_all",
    "run_scenario",
    "second_derivative",
    "sigma_from_json_dict",
    "snapshots_to_json",
    "stability_band",
    "stability_check",
    "step",
    "sup_minus_mean_embedding",
    "sup_x_embedding",
    "to_csv",
    "verify_ls_inequality",
    "verify_suite",
    "x_norm",
    "y_norm",
]
