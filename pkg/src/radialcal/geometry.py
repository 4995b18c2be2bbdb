"""Pinhole projection, pixel/normalized conversion and rotation parameterization."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.transform import Rotation

from ._validation import as_points, check_finite_scalar
from .errors import NonPositiveDepth

DEPTH_EPS = 1e-12


@dataclass(frozen=True)
class CameraIntrinsics:
    """The five intrinsic parameters of a pinhole camera.

    The calibration matrix is::

        [[alpha, gamma, u0],
         [0,     beta,  v0],
         [0,     0,     1 ]]
    """

    alpha: float
    beta: float
    gamma: float
    u0: float
    v0: float

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma", "u0", "v0"):
            object.__setattr__(self, name, check_finite_scalar(getattr(self, name), name))
        if self.alpha <= 0 or self.beta <= 0:
            raise ValueError(f"alpha and beta must be positive, got {self.alpha}, {self.beta}")

    @property
    def matrix(self) -> np.ndarray:
        return np.array(
            [[self.alpha, self.gamma, self.u0], [0.0, self.beta, self.v0], [0.0, 0.0, 1.0]]
        )

    @property
    def inverse_matrix(self) -> np.ndarray:
        a, b, g, u0, v0 = self.alpha, self.beta, self.gamma, self.u0, self.v0
        return np.array(
            [
                [1.0 / a, -g / (a * b), (g * v0 - b * u0) / (a * b)],
                [0.0, 1.0 / b, -v0 / b],
                [0.0, 0.0, 1.0],
            ]
        )

    @classmethod
    def from_matrix(cls, A) -> CameraIntrinsics:
        A = np.asarray(A, dtype=float)
        if A.shape != (3, 3):
            raise ValueError("intrinsic matrix must be 3x3")
        A = A / A[2, 2]
        return cls(alpha=A[0, 0], beta=A[1, 1], gamma=A[0, 1], u0=A[0, 2], v0=A[1, 2])

    def to_vector(self) -> np.ndarray:
        """Parameters in table order: (alpha, gamma, u0, beta, v0)."""
        return np.array([self.alpha, self.gamma, self.u0, self.beta, self.v0])

    @classmethod
    def from_vector(cls, vec) -> CameraIntrinsics:
        alpha, gamma, u0, beta, v0 = (float(x) for x in vec)
        return cls(alpha=alpha, beta=beta, gamma=gamma, u0=u0, v0=v0)


def axis_angle_to_matrix(w) -> np.ndarray:
    """Rodrigues rotation; the zero vector maps to the identity."""
    w = np.asarray(w, dtype=float).reshape(3)
    return Rotation.from_rotvec(w).as_matrix()


def matrix_to_axis_angle(R) -> np.ndarray:
    R = np.asarray(R, dtype=float).reshape(3, 3)
    return Rotation.from_matrix(R).as_rotvec()


def nearest_rotation(M) -> np.ndarray:
    """Orthogonal polar factor of ``M`` with determinant +1."""
    U, _, Vt = np.linalg.svd(np.asarray(M, dtype=float))
    D = np.diag([1.0, 1.0, np.sign(np.linalg.det(U @ Vt))])
    return U @ D @ Vt


class PoseRT:
    """Rigid transform taking world points into the camera frame, ``Pc = R Pw + t``."""

    __slots__ = ("_R", "_t")

    def __init__(self, rotation, translation):
        R = np.array(rotation, dtype=float)
        if R.shape == (3,):
            R = axis_angle_to_matrix(R)
        if R.shape != (3, 3):
            raise ValueError("rotation must be a 3x3 matrix or an axis-angle 3-vector")
        t = np.array(translation, dtype=float).reshape(3)
        if not (np.isfinite(R).all() and np.isfinite(t).all()):
            raise ValueError("pose contains non-finite values")
        R.setflags(write=False)
        t.setflags(write=False)
        self._R = R
        self._t = t

    @classmethod
    def identity(cls) -> PoseRT:
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_axis_angle(cls, w, t) -> PoseRT:
        return cls(axis_angle_to_matrix(w), t)

    @property
    def rotation(self) -> np.ndarray:
        return self._R

    @property
    def translation(self) -> np.ndarray:
        return self._t

    @property
    def axis_angle(self) -> np.ndarray:
        return matrix_to_axis_angle(self._R)

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.axis_angle, self._t])

    @classmethod
    def from_vector(cls, vec) -> PoseRT:
        vec = np.asarray(vec, dtype=float)
        return cls.from_axis_angle(vec[:3], vec[3:6])

    def transform(self, pw) -> np.ndarray:
        pw = as_points(pw, 3, name="world points")
        return pw @ self._R.T + self._t

    def __repr__(self):
        w = np.array2string(self.axis_angle, precision=6)
        t = np.array2string(self._t, precision=6)
        return f"PoseRT(axis_angle={w}, translation={t})"

    def __eq__(self, other):
        if not isinstance(other, PoseRT):
            return NotImplemented
        return np.array_equal(self._R, other._R) and np.array_equal(self._t, other._t)

    __hash__ = None


def project(intr: CameraIntrinsics, pose: PoseRT, pw) -> np.ndarray:
    """Distortion-free pixel image of world point(s) ``pw``.

    Accepts a single point ``(3,)`` or an array ``(n, 3)`` and returns the
    matching shape ``(2,)`` or ``(n, 2)``.
    """
    single = np.ndim(pw) == 1
    pc = pose.transform(pw)
    z = pc[:, 2]
    bad = np.flatnonzero(z <= DEPTH_EPS)
    if bad.size:
        raise NonPositiveDepth(
            f"point {int(bad[0])} has camera depth {z[bad[0]]:.3g} <= {DEPTH_EPS}",
            point=int(bad[0]),
        )
    xy = pc[:, :2] / z[:, None]
    uv = normalized_to_pixel(intr, xy)
    return uv[0] if single else uv


def pixel_to_normalized(intr: CameraIntrinsics, p) -> np.ndarray:
    single = np.ndim(p) == 1
    uv = as_points(p, 2, name="pixels", allow_nan=True)
    y = (uv[:, 1] - intr.v0) / intr.beta
    x = (uv[:, 0] - intr.u0 - intr.gamma * y) / intr.alpha
    out = np.column_stack([x, y])
    return out[0] if single else out


def normalized_to_pixel(intr: CameraIntrinsics, p) -> np.ndarray:
    single = np.ndim(p) == 1
    xy = as_points(p, 2, name="normalized points", allow_nan=True)
    u = intr.alpha * xy[:, 0] + intr.gamma * xy[:, 1] + intr.u0
    v = intr.beta * xy[:, 1] + intr.v0
    out = np.column_stack([u, v])
    return out[0] if single else out
