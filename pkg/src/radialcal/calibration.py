"""Planar-target calibration: closed-form initialization followed by joint refinement.

The pipeline runs four stages:

1. per-view homographies and the intrinsic matrix from the image of the
   absolute conic,
2. per-view poses from the homographies,
3. linear least-squares distortion coefficients with intrinsics and poses
   held fixed,
4. Levenberg-Marquardt over every parameter, minimizing the summed squared
   pixel distance between observed corners and projected-then-distorted
   target points.

Stages 1 and 2 do not depend on the distortion model, so they are computed
once (:func:`initialize`) and shared when several models are compared.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .distortion import DistortionModel, model_from_kind
from .errors import (
    BehindCamera,
    CalibrationError,
    DegenerateConfiguration,
    IllConditioned,
    InsufficientViews,
    NonPositiveDepth,
    OptimizerDiverged,
    RankDeficient,
)
from .geometry import DEPTH_EPS, CameraIntrinsics, PoseRT, nearest_rotation
from .optimizer import LmOptions, minimize

logger = logging.getLogger(__name__)

FITTABLE_KINDS = ("poly24", "poly2", "quadcubic")
MIN_VIEWS = 3
MIN_POINTS = 4


# ---------------------------------------------------------------------------
# Data containers
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CalibrationDataset:
    """Planar target points and the observed corners in each view.

    ``views`` has shape ``(N, n, 2)``; a missing corner is a row of NaN.
    """

    target_points: np.ndarray
    views: np.ndarray
    names: tuple = ()

    def __post_init__(self):
        pts = np.array(self.target_points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] not in (2, 3):
            raise ValueError("target_points must have shape (n, 3) or (n, 2)")
        if pts.shape[1] == 2:
            pts = np.column_stack([pts, np.zeros(len(pts))])
        if not np.isfinite(pts).all():
            raise ValueError("target_points must be finite")
        if np.any(pts[:, 2] != 0.0):
            raise ValueError("target points must lie on the plane Z = 0")
        if len(pts) < MIN_POINTS:
            raise ValueError(f"need at least {MIN_POINTS} target points, got {len(pts)}")

        views = np.array(self.views, dtype=float)
        if views.ndim == 2:
            views = views[None]
        if views.ndim != 3 or views.shape[1:] != (len(pts), 2):
            raise ValueError(
                f"views must have shape (N, {len(pts)}, 2), got {np.shape(self.views)}"
            )
        if np.isinf(views).any():
            raise ValueError("observed corners must be finite or NaN")
        # a corner is either fully present or fully missing
        views[np.isnan(views).any(axis=2)] = np.nan

        names = tuple(self.names) or tuple(f"view{i + 1}" for i in range(len(views)))
        if len(names) != len(views):
            raise ValueError("names must match the number of views")
        pts.setflags(write=False)
        views.setflags(write=False)
        object.__setattr__(self, "target_points", pts)
        object.__setattr__(self, "views", views)
        object.__setattr__(self, "names", names)

    @property
    def n_views(self) -> int:
        return self.views.shape[0]

    @property
    def n_points(self) -> int:
        return self.target_points.shape[0]

    @property
    def mask(self) -> np.ndarray:
        """Boolean ``(N, n)`` array, True where a corner was observed."""
        return ~np.isnan(self.views[:, :, 0])

    def view_correspondences(self, i):
        """``(world_xy, pixels)`` of the corners observed in view ``i``."""
        m = self.mask[i]
        return self.target_points[m, :2], self.views[i, m]


@dataclass(frozen=True, eq=False)
class CalibrationResult:
    intrinsics: CameraIntrinsics
    distortion: DistortionModel
    poses: tuple
    final_j: float
    per_view_rms: tuple = ()
    iterations: int = 0
    initial_j: float | None = None
    termination: str = ""
    cost_history: tuple = field(default=(), repr=False)

    def to_dict(self) -> dict:
        intr = self.intrinsics
        return {
            "model": self.distortion.kind,
            "J": self.final_j,
            "alpha": intr.alpha,
            "gamma": intr.gamma,
            "u0": intr.u0,
            "beta": intr.beta,
            "v0": intr.v0,
            "k": list(self.distortion.coefficients),
            "poses": [
                {"axis_angle": p.axis_angle.tolist(), "translation": p.translation.tolist()}
                for p in self.poses
            ],
            "per_view_rms": list(self.per_view_rms),
            "iterations": self.iterations,
            "initial_J": self.initial_j,
            "termination": self.termination,
        }


# ---------------------------------------------------------------------------
# Stage 1: homographies and intrinsics
# ---------------------------------------------------------------------------


def _isotropic_normalizer(pts):
    centroid = pts.mean(axis=0)
    mean_dist = np.mean(np.linalg.norm(pts - centroid, axis=1))
    if not mean_dist > 0:
        raise DegenerateConfiguration("all points coincide")
    s = np.sqrt(2.0) / mean_dist
    return np.array([[s, 0.0, -s * centroid[0]], [0.0, s, -s * centroid[1]], [0.0, 0.0, 1.0]])


def _check_spread(pts, what):
    if len(np.unique(pts, axis=0)) < MIN_POINTS:
        raise DegenerateConfiguration(f"fewer than {MIN_POINTS} distinct {what}")
    centered = pts - pts.mean(axis=0)
    sv = np.linalg.svd(centered, compute_uv=False)
    if sv[1] <= 1e-9 * sv[0]:
        raise DegenerateConfiguration(f"{what} are collinear")


def estimate_homography(world, pixels) -> np.ndarray:
    """Normalized DLT homography mapping target-plane ``(X, Y)`` to pixels.

    Returns ``H`` with unit Frobenius norm, signed so that the first world
    point maps to a positive third coordinate.
    """
    world = np.asarray(world, dtype=float)
    pixels = np.asarray(pixels, dtype=float)
    if world.shape != pixels.shape or world.ndim != 2 or world.shape[1] != 2:
        raise ValueError("world and pixels must both have shape (n, 2)")
    if len(world) < MIN_POINTS:
        raise DegenerateConfiguration(
            f"a homography needs at least {MIN_POINTS} correspondences, got {len(world)}"
        )
    _check_spread(world, "target points")
    _check_spread(pixels, "image points")

    Tw = _isotropic_normalizer(world)
    Tp = _isotropic_normalizer(pixels)
    wn = world @ Tw[:2, :2].T + Tw[:2, 2]
    pn = pixels @ Tp[:2, :2].T + Tp[:2, 2]

    n = len(world)
    M = np.zeros((2 * n, 9))
    X, Y = wn[:, 0], wn[:, 1]
    u, v = pn[:, 0], pn[:, 1]
    M[0::2, 0], M[0::2, 1], M[0::2, 2] = X, Y, 1.0
    M[0::2, 6], M[0::2, 7], M[0::2, 8] = -u * X, -u * Y, -u
    M[1::2, 3], M[1::2, 4], M[1::2, 5] = X, Y, 1.0
    M[1::2, 6], M[1::2, 7], M[1::2, 8] = -v * X, -v * Y, -v
    _, sv, Vt = np.linalg.svd(M)
    if sv[7] <= 1e-10 * sv[0]:
        raise DegenerateConfiguration("correspondences do not determine a unique homography")
    Hn = Vt[-1].reshape(3, 3)

    H = np.linalg.solve(Tp, Hn @ Tw)
    H /= np.linalg.norm(H)
    if (H @ np.array([world[0, 0], world[0, 1], 1.0]))[2] < 0:
        H = -H
    return H


def _conic_constraint(H, i, j):
    hi, hj = H[:, i], H[:, j]
    return np.array(
        [
            hi[0] * hj[0],
            hi[0] * hj[1] + hi[1] * hj[0],
            hi[1] * hj[1],
            hi[2] * hj[0] + hi[0] * hj[2],
            hi[2] * hj[1] + hi[1] * hj[2],
            hi[2] * hj[2],
        ]
    )


def pixel_normalizer(pixels) -> np.ndarray:
    """Similarity moving the pixel centroid to the origin with unit mean distance."""
    pixels = np.asarray(pixels, dtype=float).reshape(-1, 2)
    pixels = pixels[np.isfinite(pixels).all(axis=1)]
    c = pixels.mean(axis=0)
    s = np.mean(np.linalg.norm(pixels - c, axis=1))
    if not s > 0:
        raise DegenerateConfiguration("observed pixels have no spread")
    return np.array([[1.0 / s, 0.0, -c[0] / s], [0.0, 1.0 / s, -c[1] / s], [0.0, 0.0, 1.0]])


def estimate_intrinsics(homographies, normalizer=None) -> CameraIntrinsics:
    """Closed-form intrinsics (skew included) from three or more plane homographies.

    ``normalizer`` is an optional 3x3 pixel similarity (see
    :func:`pixel_normalizer`) applied before solving to balance the
    constraint matrix; the result is expressed in the original pixels.
    """
    Hs = [np.asarray(H, dtype=float) for H in homographies]
    if len(Hs) < MIN_VIEWS:
        raise InsufficientViews(
            f"at least {MIN_VIEWS} views are required to estimate all five intrinsic "
            f"parameters, got {len(Hs)}"
        )
    T = np.eye(3) if normalizer is None else np.asarray(normalizer, dtype=float)
    rows = []
    for H in Hs:
        Hc = T @ H
        Hc = Hc / np.linalg.norm(Hc)
        rows.append(_conic_constraint(Hc, 0, 1))
        rows.append(_conic_constraint(Hc, 0, 0) - _conic_constraint(Hc, 1, 1))
    V = np.array(rows)
    _, sv, Vt = np.linalg.svd(V)
    if sv[4] <= 1e-8 * sv[0]:
        raise IllConditioned(
            "homography constraints are rank deficient; the views need distinct plane orientations"
        )
    B11, B12, B22, B13, B23, B33 = Vt[-1]
    if B11 < 0:
        B11, B12, B22, B13, B23, B33 = -B11, -B12, -B22, -B13, -B23, -B33

    den = B11 * B22 - B12 * B12
    if not den > 0:
        raise IllConditioned("image of the absolute conic is not positive definite")
    v0 = (B12 * B13 - B11 * B23) / den
    lam = B33 - (B13 * B13 + v0 * (B12 * B13 - B11 * B23)) / B11
    if not lam / B11 > 0:
        raise IllConditioned("image of the absolute conic is not positive definite")
    alpha = np.sqrt(lam / B11)
    beta = np.sqrt(lam * B11 / den)
    gamma = -B12 * alpha * alpha * beta / lam
    u0 = gamma * v0 / beta - B13 * alpha * alpha / lam

    A_norm = np.array([[alpha, gamma, u0], [0.0, beta, v0], [0.0, 0.0, 1.0]])
    return CameraIntrinsics.from_matrix(np.linalg.solve(T, A_norm))


# ---------------------------------------------------------------------------
# Stage 2: poses
# ---------------------------------------------------------------------------


def estimate_extrinsics(intr: CameraIntrinsics, H, target_points=None) -> PoseRT:
    """Pose of the target plane from its homography.

    The rotation is projected onto SO(3) and the overall sign is chosen so
    that the target lies in front of the camera. When ``target_points`` are
    given every one of them must end up at positive depth.
    """
    H = np.asarray(H, dtype=float)
    if abs(np.linalg.det(H)) < 1e-300:
        raise DegenerateConfiguration("homography is singular")
    Ainv = intr.inverse_matrix
    b1, b2, b3 = (Ainv @ H[:, k] for k in range(3))
    lam = 1.0 / np.linalg.norm(b1)
    if b3[2] * lam < 0:
        lam = -lam
    r1, r2, t = lam * b1, lam * b2, lam * b3
    R = nearest_rotation(np.column_stack([r1, r2, np.cross(r1, r2)]))
    pose = PoseRT(R, t)

    if target_points is None:
        depths = np.array([t[2]])
    else:
        depths = pose.transform(target_points)[:, 2]
    if not np.all(depths > DEPTH_EPS):
        raise BehindCamera("no sign of the homography places the whole target in front of the camera")
    return pose


def initialize(dataset: CalibrationDataset):
    """Model-independent stages: intrinsics and per-view poses.

    Returns ``(intrinsics, poses)``.
    """
    if dataset.n_views < MIN_VIEWS:
        raise InsufficientViews(
            f"at least {MIN_VIEWS} views are required to estimate all five intrinsic "
            f"parameters, got {dataset.n_views}",
            stage="intrinsics",
        )
    Hs = []
    for i, name in enumerate(dataset.names):
        world, pix = dataset.view_correspondences(i)
        try:
            Hs.append(estimate_homography(world, pix))
        except CalibrationError as exc:
            exc.stage = f"homography[{name}]"
            raise
    try:
        intr = estimate_intrinsics(Hs, normalizer=pixel_normalizer(dataset.views))
    except CalibrationError as exc:
        exc.stage = "intrinsics"
        raise
    poses = []
    for i, (H, name) in enumerate(zip(Hs, dataset.names)):
        try:
            poses.append(estimate_extrinsics(intr, H, dataset.target_points))
        except CalibrationError as exc:
            exc.stage = f"extrinsics[{name}]"
            raise
    return intr, tuple(poses)


# ---------------------------------------------------------------------------
# Stage 3: linear distortion estimate
# ---------------------------------------------------------------------------


def _basis(kind, r):
    if kind == "poly24":
        return [r**2, r**4]
    if kind == "poly2":
        return [r**2]
    if kind == "quadcubic":
        return [r, r**2]
    raise ValueError(f"cannot fit distortion kind {kind!r}; choose from {FITTABLE_KINDS}")


def _ideal_projection(intr, pose, target_points, view=None):
    pc = pose.transform(target_points)
    z = pc[:, 2]
    bad = np.flatnonzero(z <= DEPTH_EPS)
    if bad.size:
        raise NonPositiveDepth(
            f"view {view}, point {int(bad[0])}: camera depth {z[bad[0]]:.3g} is not positive",
            view=view,
            point=int(bad[0]),
        )
    return pc[:, :2] / z[:, None]


def distortion_design(intr, poses, dataset: CalibrationDataset, kind):
    """Linear system ``M k = d`` for the distortion coefficients.

    Rows alternate u and v for each observed corner:
    ``(u - u0) phi(r) . k = u_d - u`` and likewise for v.
    """
    blocks_m, blocks_d = [], []
    for i, pose in enumerate(poses):
        m = dataset.mask[i]
        xy = _ideal_projection(intr, pose, dataset.target_points, view=i)[m]
        r = np.hypot(xy[:, 0], xy[:, 1])
        u = intr.alpha * xy[:, 0] + intr.gamma * xy[:, 1] + intr.u0
        v = intr.beta * xy[:, 1] + intr.v0
        phi = np.column_stack(_basis(kind, r))
        obs = dataset.views[i, m]
        rows = np.empty((2 * len(r), phi.shape[1]))
        rows[0::2] = (u - intr.u0)[:, None] * phi
        rows[1::2] = (v - intr.v0)[:, None] * phi
        rhs = np.empty(2 * len(r))
        rhs[0::2] = obs[:, 0] - u
        rhs[1::2] = obs[:, 1] - v
        blocks_m.append(rows)
        blocks_d.append(rhs)
    return np.vstack(blocks_m), np.concatenate(blocks_d)


def estimate_distortion_linear(intr, poses, dataset: CalibrationDataset, kind) -> DistortionModel:
    M, d = distortion_design(intr, poses, dataset, kind)
    sv = np.linalg.svd(M, compute_uv=False)
    if sv[-1] <= 1e-10 * sv[0]:
        raise RankDeficient("radii do not spread enough to separate the distortion terms")
    k, *_ = np.linalg.lstsq(M, d, rcond=None)
    return model_from_kind(kind, k)


# ---------------------------------------------------------------------------
# Objective and refinement
# ---------------------------------------------------------------------------


def reproject(intr, distortion, poses, target_points) -> np.ndarray:
    """Predicted (distorted) pixels of every target point in every view, ``(N, n, 2)``."""
    out = []
    for i, pose in enumerate(poses):
        xy = _ideal_projection(intr, pose, target_points, view=i)
        r = np.hypot(xy[:, 0], xy[:, 1])
        xy = xy * distortion.factor(r)[:, None]
        u = intr.alpha * xy[:, 0] + intr.gamma * xy[:, 1] + intr.u0
        v = intr.beta * xy[:, 1] + intr.v0
        out.append(np.column_stack([u, v]))
    return np.array(out)


def residuals(intr, distortion, poses, dataset: CalibrationDataset) -> np.ndarray:
    """Flat residual vector (predicted minus observed) over observed corners, view-major."""
    if len(poses) != dataset.n_views:
        raise ValueError(f"expected {dataset.n_views} poses, got {len(poses)}")
    pred = reproject(intr, distortion, poses, dataset.target_points)
    mask = dataset.mask
    return (pred[mask] - dataset.views[mask]).ravel()


def objective_j(intr, distortion, poses, dataset: CalibrationDataset) -> float:
    """Sum over views and corners of the squared pixel reprojection error."""
    r = residuals(intr, distortion, poses, dataset)
    return float(np.dot(r, r))


def per_view_rms(intr, distortion, poses, dataset: CalibrationDataset) -> tuple:
    pred = reproject(intr, distortion, poses, dataset.target_points)
    out = []
    for i in range(dataset.n_views):
        m = dataset.mask[i]
        d2 = np.sum((pred[i, m] - dataset.views[i, m]) ** 2, axis=1)
        out.append(float(np.sqrt(d2.mean())) if d2.size else float("nan"))
    return tuple(out)


def pack_parameters(intr, distortion, poses) -> np.ndarray:
    return np.concatenate(
        [intr.to_vector(), np.asarray(distortion.coefficients, dtype=float)]
        + [p.to_vector() for p in poses]
    )


def unpack_parameters(x, distortion: DistortionModel, n_views):
    nk = distortion.n_coeffs
    intr = CameraIntrinsics.from_vector(x[:5])
    model = distortion.with_coefficients(x[5 : 5 + nk])
    base = 5 + nk
    poses = tuple(PoseRT.from_vector(x[base + 6 * i : base + 6 * i + 6]) for i in range(n_views))
    return intr, model, poses


def _make_residual_fn(template: DistortionModel, dataset: CalibrationDataset):
    def fn(x):
        if not (x[0] > 0 and x[3] > 0):
            return np.full(2 * int(dataset.mask.sum()), np.inf)
        intr, model, poses = unpack_parameters(x, template, dataset.n_views)
        return residuals(intr, model, poses, dataset)

    return fn


def _result(intr, model, poses, dataset, **extra) -> CalibrationResult:
    return CalibrationResult(
        intrinsics=intr,
        distortion=model,
        poses=tuple(poses),
        final_j=objective_j(intr, model, poses, dataset),
        per_view_rms=per_view_rms(intr, model, poses, dataset),
        **extra,
    )


def refine_all(initial: CalibrationResult, dataset: CalibrationDataset, opts=None) -> CalibrationResult:
    """Jointly refine intrinsics, distortion and every pose by Levenberg-Marquardt."""
    opts = opts or LmOptions()
    fn = _make_residual_fn(initial.distortion, dataset)
    x0 = pack_parameters(initial.intrinsics, initial.distortion, initial.poses)
    j0 = objective_j(initial.intrinsics, initial.distortion, initial.poses, dataset)
    if not np.isfinite(j0):
        raise OptimizerDiverged("initial objective is not finite", stage="refinement")
    res = minimize(fn, x0, opts)
    if not np.isfinite(res.cost) or res.cost > res.initial_cost:
        raise OptimizerDiverged(
            f"objective went from {res.initial_cost:.6g} to {res.cost:.6g}", stage="refinement"
        )
    intr, model, poses = unpack_parameters(res.x, initial.distortion, dataset.n_views)
    if objective_j(intr, model, poses, dataset) > j0:
        # no improvement beyond the rotation-vector round trip: keep the input
        intr, model, poses = initial.intrinsics, initial.distortion, initial.poses
    out = _result(
        intr,
        model,
        poses,
        dataset,
        iterations=res.iterations,
        initial_j=j0,
        termination=res.termination,
        cost_history=tuple(res.cost_history),
    )
    logger.info(
        "refined %s: J %.6g -> %.6g in %d iterations (%s)",
        model.kind, j0, out.final_j, res.iterations, res.termination,
    )
    return out


def calibrate(dataset: CalibrationDataset, kind="quadcubic", opts=None, init=None) -> CalibrationResult:
    """Run the full pipeline for one distortion model.

    ``init`` may carry a precomputed ``(intrinsics, poses)`` pair from
    :func:`initialize`, so several models can share the same starting point.
    """
    if kind not in FITTABLE_KINDS:
        raise ValueError(f"cannot fit distortion kind {kind!r}; choose from {FITTABLE_KINDS}")
    intr, poses = init if init is not None else initialize(dataset)
    try:
        model = estimate_distortion_linear(intr, poses, dataset, kind)
    except CalibrationError as exc:
        exc.stage = "distortion"
        raise
    start = _result(intr, model, poses, dataset)
    try:
        return refine_all(start, dataset, opts)
    except CalibrationError as exc:
        exc.stage = exc.stage or "refinement"
        raise


def compare_models(dataset: CalibrationDataset, kinds=FITTABLE_KINDS, opts=None) -> dict:
    """Calibrate with each model kind from one shared initialization."""
    init = initialize(dataset)
    return {kind: calibrate(dataset, kind, opts, init=init) for kind in kinds}
