"""Fluid-antenna cellular downlink: outage analytics and simulation.

The package pairs a closed-form outage pipeline (estimation error,
port correlation, joint selection statistics, spatial averaging) with
an independent Monte Carlo engine, so every analytic quantity can be
cross-checked numerically.
"""

from .channel import (
    CorrelationProfile,
    EstimationQuality,
    autocorrelation,
    correlation_profile,
    error_variance_at,
    estimation_error_variance,
    joint_magnitude_cdf,
    joint_magnitude_pdf,
    min_skipped_ports,
    pilot_noise_ratio,
    sample_correlated_channels,
)
from .field import (
    InterferenceModel,
    NetworkConfig,
    default_outer_radius,
    gamma_interference_model,
    mean_interference,
    sample_gamma_interference,
    sample_interferers,
    sample_serving_distance,
)
from .geometry import (
    FaArrayConfig,
    FluidParams,
    FrameBudget,
    InfeasibleFrameError,
    build_frame_budget,
    fluid_velocity,
    link_distance,
    port_displacement,
    switching_delay,
    trained_port_indices,
)
from .mc import (
    TrialOutcome,
    TrialPlan,
    estimate_lmmse_mse,
    estimate_outage,
    run_trial,
)
from .numerics import (
    ConvergenceError,
    QuadratureSpec,
    bessel_i0,
    bessel_i0e,
    bessel_j0,
    erf,
    gamma_pdf,
    integrate_finite,
    integrate_finite_with_error,
    marcum_q1,
)
from .outage import (
    RateTarget,
    conditional_outage,
    conditional_outage_bounds,
    joint_outage_given_thresholds,
    outage_probability,
    outage_thresholds,
    sinr_threshold,
)

__version__ = "0.1.0"

__all__ = [
    "ConvergenceError",
    "CorrelationProfile",
    "EstimationQuality",
    "FaArrayConfig",
    "FluidParams",
    "FrameBudget",
    "InfeasibleFrameError",
    "InterferenceModel",
    "NetworkConfig",
    "QuadratureSpec",
    "RateTarget",
    "TrialOutcome",
    "TrialPlan",
    "autocorrelation",
    "bessel_i0",
    "bessel_i0e",
    "bessel_j0",
    "build_frame_budget",
    "conditional_outage",
    "conditional_outage_bounds",
    "correlation_profile",
    "default_outer_radius",
    "erf",
    "error_variance_at",
    "estimate_lmmse_mse",
    "estimate_outage",
    "estimation_error_variance",
    "fluid_velocity",
    "gamma_interference_model",
    "gamma_pdf",
    "integrate_finite",
    "integrate_finite_with_error",
    "joint_magnitude_cdf",
    "joint_magnitude_pdf",
    "joint_outage_given_thresholds",
    "link_distance",
    "marcum_q1",
    "mean_interference",
    "min_skipped_ports",
    "outage_probability",
    "outage_thresholds",
    "pilot_noise_ratio",
    "port_displacement",
    "run_trial",
    "sample_correlated_channels",
    "sample_gamma_interference",
    "sample_interferers",
    "sample_serving_distance",
    "sinr_threshold",
    "switching_delay",
    "trained_port_indices",
]
