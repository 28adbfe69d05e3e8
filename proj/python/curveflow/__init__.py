"""Python bindings for the curveflow library."""

from ._core import (
    ConfigError,
    DegenerateTrajectoryError,
    Schedule,
    curvature,
    energy_distance,
    generate,
    gradient_check,
    run_cli,
    sample_noise,
    schedule_diagnostics,
    sliced_wasserstein,
)

__all__ = [
    "ConfigError",
    "DegenerateTrajectoryError",
    "Schedule",
    "curvature",
    "energy_distance",
    "generate",
    "gradient_check",
    "run_cli",
    "sample_noise",
    "schedule_diagnostics",
    "sliced_wasserstein",
]
