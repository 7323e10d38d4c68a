"""Closed-loop EKF linearity estimation for SAR ADCs."""

from ._uglms import (
    ConfigError,
    Device,
    NumericalBreakdown,
    bit_vector,
    calibrate_measurement_variance,
    config_keys,
    dnl_from_edges,
    endpoint_corrected_inl,
    estimate,
    generate_device,
    localized_sweep,
    quadratic_carrier,
    run_convergence,
    run_epsilon,
    run_heatmap,
    run_single,
    run_timing,
)

__all__ = [
    "ConfigError",
    "Device",
    "NumericalBreakdown",
    "bit_vector",
    "calibrate_measurement_variance",
    "config_keys",
    "dnl_from_edges",
    "endpoint_corrected_inl",
    "estimate",
    "generate_device",
    "localized_sweep",
    "quadratic_carrier",
    "run_convergence",
    "run_epsilon",
    "run_heatmap",
    "run_single",
    "run_timing",
]
