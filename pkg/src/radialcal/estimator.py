"""scikit-learn style front ends.

``PlanarCalibrator`` fits a camera to a planar-target dataset and then acts
as a transformer from observed (distorted) pixels to ideal pixels.
``RadialUndistorter`` wraps a known model so it can sit in a pipeline.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import as_points
from .calibration import (
    FITTABLE_KINDS,
    CalibrationDataset,
    calibrate,
    objective_j,
    reproject,
)
from .distortion import (
    distort_pixel,
    model_from_kind,
    undistort_pixel,
    valid_radius_range,
)
from .geometry import CameraIntrinsics
from .optimizer import LmOptions


def check_dataset(X, target_points=None) -> CalibrationDataset:
    """Accept a :class:`CalibrationDataset` or a ``(N, n, 2)`` corner array plus target points."""
    if isinstance(X, CalibrationDataset):
        if target_points is not None:
            raise ValueError("target_points must not be given together with a CalibrationDataset")
        return X
    if target_points is None:
        raise ValueError("target_points are required when X is an array of observed corners")
    return CalibrationDataset(np.asarray(target_points, dtype=float), np.asarray(X, dtype=float))


class PlanarCalibrator(TransformerMixin, BaseEstimator):
    """Calibrate intrinsics, radial distortion and view poses from a planar target.

    Parameters
    ----------
    model : {"quadcubic", "poly24", "poly2"}
        Radial distortion family to fit.
    max_iters, tolx, tolfun, max_fn_evals :
        Levenberg-Marquardt stopping settings.

    Attributes
    ----------
    intrinsics_ : CameraIntrinsics
    distortion_ : DistortionModel
    poses_ : tuple of PoseRT
    objective_ : float
        Summed squared reprojection error at the solution.
    result_ : CalibrationResult
    """

    def __init__(self, model="quadcubic", max_iters=120, tolx=1e-5, tolfun=1e-5, max_fn_evals=8000):
        self.model = model
        self.max_iters = max_iters
        self.tolx = tolx
        self.tolfun = tolfun
        self.max_fn_evals = max_fn_evals

    def _lm_options(self):
        return LmOptions(
            param_tol=self.tolx,
            fn_tol=self.tolfun,
            max_iters=self.max_iters,
            max_fn_evals=self.max_fn_evals,
        )

    def fit(self, X, y=None):
        """Fit to ``X``, a dataset or an ``(N, n, 2)`` corner array with ``y`` the target points."""
        if self.model not in FITTABLE_KINDS:
            raise ValueError(f"model must be one of {FITTABLE_KINDS}, got {self.model!r}")
        dataset = check_dataset(X, y)
        res = calibrate(dataset, self.model, self._lm_options())
        self.result_ = res
        self.intrinsics_ = res.intrinsics
        self.distortion_ = res.distortion
        self.poses_ = res.poses
        self.objective_ = res.final_j
        self.n_iter_ = res.iterations
        self.target_points_ = dataset.target_points
        return self

    def transform(self, X):
        """Undistort observed pixels ``(n, 2)``."""
        check_is_fitted(self, "result_")
        return undistort_pixel(self.distortion_, self.intrinsics_, as_points(X, 2, name="X"))

    def inverse_transform(self, X):
        """Apply the fitted distortion to ideal pixels ``(n, 2)``."""
        check_is_fitted(self, "result_")
        return distort_pixel(self.distortion_, self.intrinsics_, as_points(X, 2, name="X"))

    def predict(self, X=None):
        """Predicted corner pixels ``(N, n, 2)`` for target points ``X`` in every fitted view."""
        check_is_fitted(self, "result_")
        pts = self.target_points_ if X is None else as_points(X, 3, name="X")
        return reproject(self.intrinsics_, self.distortion_, self.poses_, pts)

    def score(self, X, y=None):
        """Negative reprojection objective on a dataset with the fitted views."""
        check_is_fitted(self, "result_")
        dataset = check_dataset(X, y)
        return -objective_j(self.intrinsics_, self.distortion_, self.poses_, dataset)


class RadialUndistorter(TransformerMixin, BaseEstimator):
    """Map distorted pixels to ideal pixels with fixed intrinsics and coefficients."""

    def __init__(self, model="quadcubic", k1=0.0, k2=0.0, alpha=1.0, beta=1.0, gamma=0.0, u0=0.0, v0=0.0):
        self.model = model
        self.k1 = k1
        self.k2 = k2
        self.alpha = alpha
        self.beta = beta
        self.gamma = gamma
        self.u0 = u0
        self.v0 = v0

    def fit(self, X=None, y=None):
        self.distortion_ = model_from_kind(self.model, [self.k1, self.k2])
        self.intrinsics_ = CameraIntrinsics(self.alpha, self.beta, self.gamma, self.u0, self.v0)
        self.valid_range_ = valid_radius_range(self.distortion_)
        return self

    def transform(self, X):
        check_is_fitted(self, "distortion_")
        return undistort_pixel(self.distortion_, self.intrinsics_, as_points(X, 2, name="X"))

    def inverse_transform(self, X):
        check_is_fitted(self, "distortion_")
        return distort_pixel(self.distortion_, self.intrinsics_, as_points(X, 2, name="X"))
