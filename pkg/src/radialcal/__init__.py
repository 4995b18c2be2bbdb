"""Planar camera calibration with closed-form radial undistortion."""

from .calibration import (
    CalibrationDataset,
    CalibrationResult,
    calibrate,
    compare_models,
    estimate_distortion_linear,
    estimate_extrinsics,
    estimate_homography,
    estimate_intrinsics,
    initialize,
    objective_j,
    refine_all,
)
from .distortion import (
    DistortedToUndistorted,
    DistortionModel,
    EvenPoly1,
    EvenPoly2,
    QuadCubic,
    ValidRadiusRange,
    approx_inverse_evenpoly2,
    distort_pixel,
    distort_point,
    distort_radius,
    du_undistort_radius,
    model_from_kind,
    undistort_pixel,
    undistort_radius_analytic,
    undistort_radius_numeric,
    valid_radius_range,
)
from .estimator import PlanarCalibrator, RadialUndistorter
from .geometry import (
    CameraIntrinsics,
    PoseRT,
    axis_angle_to_matrix,
    matrix_to_axis_angle,
    normalized_to_pixel,
    pixel_to_normalized,
    project,
)
from .io import load_dataset, save_dataset
from .optimizer import LmOptions, minimize, numeric_jacobian
from .synth import SynthSpec, make_target, synth_views

__version__ = "0.1.0"

__all__ = [
    "approx_inverse_evenpoly2",
    "axis_angle_to_matrix",
    "calibrate",
    "CalibrationDataset",
    "CalibrationResult",
    "CameraIntrinsics",
    "compare_models",
    "distort_pixel",
    "distort_point",
    "distort_radius",
    "DistortedToUndistorted",
    "DistortionModel",
    "du_undistort_radius",
    "estimate_distortion_linear",
    "estimate_extrinsics",
    "estimate_homography",
    "estimate_intrinsics",
    "EvenPoly1",
    "EvenPoly2",
    "initialize",
    "LmOptions",
    "load_dataset",
    "make_target",
    "matrix_to_axis_angle",
    "minimize",
    "model_from_kind",
    "normalized_to_pixel",
    "numeric_jacobian",
    "objective_j",
    "pixel_to_normalized",
    "PlanarCalibrator",
    "PoseRT",
    "project",
    "QuadCubic",
    "RadialUndistorter",
    "refine_all",
    "save_dataset",
    "synth_views",
    "SynthSpec",
    "undistort_pixel",
    "undistort_radius_analytic",
    "undistort_radius_numeric",
    "valid_radius_range",
    "ValidRadiusRange",
]
