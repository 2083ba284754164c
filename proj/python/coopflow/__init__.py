"""Cooperative localization with particle-flow belief propagation."""

from ._coopflow import (
    ConfigError,
    DegenerateWeights,
    InvalidParameter,
    NumericalError,
    SingularGeometry,
    cumulative_frequency,
    flow_coefficients,
    generate_scenario,
    lambda_grid,
    linear_flow,
    motion_model,
    outage_probability,
    parse_config,
    range_jacobian_block,
    run_experiment,
    sigma_point_cov_update,
    systematic_resample,
)

__all__ = [
    "ConfigError",
    "DegenerateWeights",
    "InvalidParameter",
    "NumericalError",
    "SingularGeometry",
    "cumulative_frequency",
    "flow_coefficients",
    "generate_scenario",
    "lambda_grid",
    "linear_flow",
    "motion_model",
    "outage_probability",
    "parse_config",
    "range_jacobian_block",
    "run_experiment",
    "sigma_point_cov_update",
    "systematic_resample",
]
