"""Python bindings for the flexsense core library."""

from ._core import (
    ArrayGeometry,
    FlexsenseError,
    build_geometry,
    calibrate_gains,
    coarray_dof,
    difference_set,
    estimate_doa_foc,
    estimate_doa_soc,
    foc_matrix,
    nmse,
    pilot_matrix,
    reconstruct_channel,
    rmse_doa,
    run_csv,
    sample_covariance,
    scenarios,
    steering_vector,
    theoretical_nmse,
    theory_csv,
)

__all__ = [
    "ArrayGeometry",
    "FlexsenseError",
    "build_geometry",
    "calibrate_gains",
    "coarray_dof",
    "difference_set",
    "estimate_doa_foc",
    "estimate_doa_soc",
    "foc_matrix",
    "nmse",
    "pilot_matrix",
    "reconstruct_channel",
    "rmse_doa",
    "run_csv",
    "sample_covariance",
    "scenarios",
    "steering_vector",
    "theoretical_nmse",
    "theory_csv",
]
