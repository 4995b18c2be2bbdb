"""Synthetic planar-target datasets with known ground truth."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.transform import Rotation

from .calibration import CalibrationDataset, CalibrationResult, _result
from .distortion import DistortionModel, QuadCubic, valid_radius_range
from .errors import RadiusOutOfRange
from .geometry import DEPTH_EPS, CameraIntrinsics, PoseRT


def make_target(rows, cols, square_size) -> np.ndarray:
    """Row-major grid of corners ``(i * s, j * s, 0)``."""
    if rows < 2 or cols < 2:
        raise ValueError("target grid must be at least 2x2")
    i, j = np.meshgrid(np.arange(rows), np.arange(cols), indexing="ij")
    pts = np.column_stack([i.ravel(), j.ravel(), np.zeros(i.size)]).astype(float)
    pts[:, :2] *= square_size
    return pts


@dataclass(frozen=True, eq=False)
class SynthSpec:
    """Ground truth and sampling recipe for a synthetic calibration set.

    When ``poses`` is None, ``n_views`` poses are drawn: the target is tilted
    by ``max_angle_deg / 3 .. max_angle_deg`` about a random in-plane axis,
    rolled by up to 15 degrees, and placed at a depth of ``depth_range``
    target widths with a small lateral offset.
    """

    intrinsics: CameraIntrinsics
    distortion: DistortionModel = QuadCubic()
    grid_rows: int = 8
    grid_cols: int = 8
    square_size: float = 30.0
    poses: tuple | None = None
    n_views: int = 5
    max_angle_deg: float = 30.0
    depth_range: tuple = (3.0, 5.0)
    noise_sigma: float = 0.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.grid_rows < 2 or self.grid_cols < 2:
            raise ValueError("target grid must be at least 2x2")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be non-negative")
        if self.poses is None and self.n_views < 1:
            raise ValueError("n_views must be positive")
        lo, hi = self.depth_range
        if not 0 < lo <= hi:
            raise ValueError("depth_range must satisfy 0 < low <= high")

    @property
    def target_width(self) -> float:
        return (max(self.grid_rows, self.grid_cols) - 1) * self.square_size


def sample_pose(spec: SynthSpec, rng) -> PoseRT:
    width = spec.target_width
    center = np.array(
        [(spec.grid_rows - 1) * spec.square_size / 2, (spec.grid_cols - 1) * spec.square_size / 2, 0.0]
    )
    max_tilt = np.deg2rad(spec.max_angle_deg)
    tilt = rng.uniform(max_tilt / 3.0, max_tilt)
    phi = rng.uniform(0.0, 2.0 * np.pi)
    roll = np.deg2rad(rng.uniform(-15.0, 15.0))
    R = (
        Rotation.from_rotvec([0.0, 0.0, roll])
        * Rotation.from_rotvec(tilt * np.array([np.cos(phi), np.sin(phi), 0.0]))
    ).as_matrix()
    depth = rng.uniform(*spec.depth_range) * width
    offset = rng.uniform(-0.1, 0.1, size=2) * depth
    t = -R @ center + np.array([offset[0], offset[1], depth])
    return PoseRT(R, t)


def _view_rng(seed, view):
    return np.random.default_rng([int(seed), int(view)])


def spec_poses(spec: SynthSpec) -> tuple:
    if spec.poses is not None:
        return tuple(spec.poses)
    return tuple(sample_pose(spec, _view_rng(spec.rng_seed, i)) for i in range(spec.n_views))


def synth_views(spec: SynthSpec):
    """Generate ``(dataset, ground_truth)``.

    Each view is projected, distorted and perturbed by i.i.d. Gaussian pixel
    noise. The ground truth ``final_j`` is the objective at the exact
    parameters, i.e. the energy of the realized noise.
    """
    target = make_target(spec.grid_rows, spec.grid_cols, spec.square_size)
    poses = spec_poses(spec)
    intr = spec.intrinsics
    r_max = valid_radius_range(spec.distortion).r_max
    views = []
    for i, pose in enumerate(poses):
        pc = pose.transform(target)
        if np.any(pc[:, 2] <= DEPTH_EPS):
            raise RadiusOutOfRange(f"view {i} places the target behind the camera", view=i)
        xy = pc[:, :2] / pc[:, 2:3]
        r = np.hypot(xy[:, 0], xy[:, 1])
        over = np.flatnonzero(r >= r_max)
        if over.size:
            j = int(over[0])
            raise RadiusOutOfRange(
                f"view {i}, point {j}: normalized radius {r[j]:.4f} is beyond the "
                f"invertible limit {r_max:.4f} of the distortion model",
                view=i,
                point=j,
            )
        xy = xy * spec.distortion.factor(r)[:, None]
        u = intr.alpha * xy[:, 0] + intr.gamma * xy[:, 1] + intr.u0
        v = intr.beta * xy[:, 1] + intr.v0
        uv = np.column_stack([u, v])
        if spec.noise_sigma > 0:
            # offset stream so noise draws never reuse pose-sampling draws
            uv = uv + _view_rng(spec.rng_seed, 10_000 + i).normal(0.0, spec.noise_sigma, uv.shape)
        views.append(uv)

    dataset = CalibrationDataset(target, np.array(views), tuple(f"view{i + 1}" for i in range(len(poses))))
    truth = _result(intr, spec.distortion, poses, dataset, termination="ground_truth")
    return dataset, truth


__all__ = ["SynthSpec", "make_target", "sample_pose", "spec_poses", "synth_views", "CalibrationResult"]
