"""Radial distortion models and their inverses.

Four parameterizations are supported, all centred on the principal point:

========================  =====================================  ==========
class                     radial map                             kind
========================  =====================================  ==========
``EvenPoly2(k1, k2)``     r_d = r (1 + k1 r^2 + k2 r^4)          ``poly24``
``EvenPoly1(k1)``         r_d = r (1 + k1 r^2)                   ``poly2``
``QuadCubic(k1, k2)``     r_d = r (1 + k1 r + k2 r^2)            ``quadcubic``
``DistortedToUndistorted``  r = r_d (1 + k1 r_d + k2 r_d^2)      ``du``
========================  =====================================  ==========

Radii are measured in normalized (``A^-1``-premultiplied) coordinates.
``QuadCubic`` is inverted exactly by solving a cubic in closed form; the
even polynomials use a safeguarded Newton iteration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

from .errors import NegativeRadius, NoConvergence, OutOfRange
from .geometry import CameraIntrinsics, normalized_to_pixel, pixel_to_normalized

K2_DEGENERATE = 1e-12
RANGE_RTOL = 1e-12
NEWTON_TOL = 1e-14
NEWTON_MAX_ITERS = 100


@dataclass(frozen=True)
class ValidRadiusRange:
    """Radii over which the undistorted-to-distorted map is strictly increasing."""

    r_max: float
    rd_max: float

    def contains_undistorted(self, r) -> bool:
        return bool(np.all((np.asarray(r) >= 0) & (np.asarray(r) < self.r_max)))


class DistortionModel:
    """Base class. Subclasses are frozen dataclasses whose fields are the coefficients."""

    kind = ""
    label = ""

    @property
    def coefficients(self) -> tuple:
        return tuple(getattr(self, f.name) for f in fields(self))

    @property
    def n_coeffs(self) -> int:
        return len(fields(self))

    def with_coefficients(self, coeffs) -> DistortionModel:
        return type(self)(*(float(c) for c in coeffs))

    def __post_init__(self):
        for f in fields(self):
            value = float(getattr(self, f.name))
            if not math.isfinite(value):
                raise ValueError(f"{f.name} must be finite, got {value}")
            object.__setattr__(self, f.name, value)

    def factor(self, r):
        """Radial scale ``f(r)`` so that ``r_d = r f(r)``."""
        raise NotImplementedError

    def slope(self, r):
        """Derivative of ``r f(r)`` with respect to ``r``."""
        raise NotImplementedError

    @property
    def is_identity(self) -> bool:
        return all(c == 0.0 for c in self.coefficients)


@dataclass(frozen=True)
class EvenPoly2(DistortionModel):
    k1: float = 0.0
    k2: float = 0.0
    kind = "poly24"
    label = "#1"

    def factor(self, r):
        r2 = np.square(r)
        return 1.0 + self.k1 * r2 + self.k2 * r2 * r2

    def slope(self, r):
        r2 = np.square(r)
        return 1.0 + 3.0 * self.k1 * r2 + 5.0 * self.k2 * r2 * r2


@dataclass(frozen=True)
class EvenPoly1(DistortionModel):
    k1: float = 0.0
    kind = "poly2"
    label = "#2"

    def factor(self, r):
        return 1.0 + self.k1 * np.square(r)

    def slope(self, r):
        return 1.0 + 3.0 * self.k1 * np.square(r)


@dataclass(frozen=True)
class QuadCubic(DistortionModel):
    k1: float = 0.0
    k2: float = 0.0
    kind = "quadcubic"
    label = "#3"

    def factor(self, r):
        r = np.asarray(r, dtype=float)
        return 1.0 + self.k1 * r + self.k2 * r * r

    def slope(self, r):
        r = np.asarray(r, dtype=float)
        return 1.0 + 2.0 * self.k1 * r + 3.0 * self.k2 * r * r


@dataclass(frozen=True)
class DistortedToUndistorted(DistortionModel):
    """Same polynomial as :class:`QuadCubic` but mapping distorted radius to undistorted."""

    k1: float = 0.0
    k2: float = 0.0
    kind = "du"
    label = "D-U"

    def factor(self, r):
        r = np.asarray(r, dtype=float)
        rd = distort_radius(self, r)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(r > 0, rd / np.where(r > 0, r, 1.0), 1.0)

    def slope(self, r):
        rd = distort_radius(self, r)
        return 1.0 / QuadCubic(self.k1, self.k2).slope(rd)


MODEL_KINDS = {
    "poly24": EvenPoly2,
    "poly2": EvenPoly1,
    "quadcubic": QuadCubic,
    "du": DistortedToUndistorted,
}


def model_from_kind(kind: str, coeffs=None) -> DistortionModel:
    """Build a model from its kind name (``poly24``, ``poly2``, ``quadcubic``, ``du``)."""
    try:
        cls = MODEL_KINDS[kind]
    except KeyError:
        raise ValueError(f"unknown distortion model {kind!r}; choose from {sorted(MODEL_KINDS)}")
    if coeffs is None:
        return cls()
    coeffs = list(coeffs)
    n = len(fields(cls))
    if len(coeffs) > n:
        if any(c != 0 for c in coeffs[n:]):
            raise ValueError(f"model {kind!r} takes {n} coefficient(s), got {len(coeffs)}")
        coeffs = coeffs[:n]
    return cls(*coeffs)


# ---------------------------------------------------------------------------
# Forward maps
# ---------------------------------------------------------------------------


def _scalar_or_array(values, like):
    if np.ndim(like) == 0:
        return float(values[0])
    return np.asarray(values, dtype=float).reshape(np.shape(like))


def distort_radius(m: DistortionModel, r):
    """Distorted radius ``r f(r)`` for scalar or array ``r``."""
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < 0):
        raise NegativeRadius(f"radius must be non-negative, got {r_arr.min()}")
    if isinstance(m, DistortedToUndistorted):
        fwd = QuadCubic(m.k1, m.k2)
        vals = [undistort_radius_analytic(fwd, float(x)) for x in r_arr.ravel()]
        return _scalar_or_array(vals, r)
    out = r_arr * m.factor(r_arr)
    return float(out) if np.ndim(r) == 0 else out


def distort_point(m: DistortionModel, p) -> np.ndarray:
    """Distort normalized point(s): ``(x f(r), y f(r))``."""
    xy = np.asarray(p, dtype=float)
    single = xy.ndim == 1
    xy = np.atleast_2d(xy)
    r = np.hypot(xy[:, 0], xy[:, 1])
    out = xy * m.factor(r)[:, None]
    return out[0] if single else out


def distort_pixel(m: DistortionModel, intr: CameraIntrinsics, p) -> np.ndarray:
    """Distort ideal pixel(s) about the principal point."""
    return normalized_to_pixel(intr, distort_point(m, pixel_to_normalized(intr, p)))


# ---------------------------------------------------------------------------
# Valid (monotone) range
# ---------------------------------------------------------------------------


def _smallest_positive_root_unit_quadratic(a, b):
    """Smallest positive root of ``a s^2 + b s + 1 = 0``, or ``inf``.

    Solved through ``t = 1/s``, which satisfies ``t^2 + b t + a = 0``; the
    smallest positive ``s`` is the reciprocal of the largest positive ``t``.
    """
    scale = max(abs(b), math.sqrt(abs(a)))
    if scale == 0.0:
        return math.inf
    # scaled so that b^2 - 4a cannot underflow for tiny coefficients
    a, b = a / scale / scale, b / scale
    disc = b * b - 4.0 * a
    if disc < 0:
        return math.inf
    sq = math.sqrt(disc)
    if b > 0:
        # largest root of t^2 + b t + a is -2a/(b + sq), cancellation-free
        t = -2.0 * a / (b + sq)
    else:
        t = (-b + sq) / 2.0
    t *= scale
    if t <= 0:
        return math.inf
    return 1.0 / t


def valid_radius_range(m: DistortionModel) -> ValidRadiusRange:
    if isinstance(m, QuadCubic):
        r_max = _smallest_positive_root_unit_quadratic(3.0 * m.k2, 2.0 * m.k1)
    elif isinstance(m, EvenPoly2):
        s = _smallest_positive_root_unit_quadratic(5.0 * m.k2, 3.0 * m.k1)
        r_max = math.sqrt(s)
    elif isinstance(m, EvenPoly1):
        r_max = 1.0 / math.sqrt(-3.0 * m.k1) if m.k1 < 0 else math.inf
    elif isinstance(m, DistortedToUndistorted):
        # turning point of the distorted->undistorted polynomial, in r_d
        rd_turn = _smallest_positive_root_unit_quadratic(3.0 * m.k2, 2.0 * m.k1)
        if math.isinf(rd_turn):
            return ValidRadiusRange(math.inf, math.inf)
        r_turn = rd_turn * (1.0 + m.k1 * rd_turn + m.k2 * rd_turn * rd_turn)
        return ValidRadiusRange(r_turn, rd_turn)
    else:
        raise TypeError(f"unsupported model {type(m).__name__}")
    if math.isinf(r_max):
        return ValidRadiusRange(math.inf, math.inf)
    with np.errstate(over="ignore"):
        # huge r_max from tiny coefficients: rd_max saturates to inf
        return ValidRadiusRange(r_max, float(r_max * m.factor(r_max)))


def _check_in_range(rng: ValidRadiusRange, r_d: float):
    if r_d < 0:
        raise NegativeRadius(f"distorted radius must be non-negative, got {r_d}")
    if r_d > rng.rd_max * (1.0 + RANGE_RTOL):
        raise OutOfRange(
            f"distorted radius {r_d:.6g} exceeds the invertible limit {rng.rd_max:.6g}"
        )


# ---------------------------------------------------------------------------
# Closed-form inverse of the quadratic-term model
# ---------------------------------------------------------------------------


def _cubic_roots(a, b, c):
    """Roots of ``r^3 + a r^2 + b r + c = 0`` via the depressed cubic.

    Returns ``(real_roots, complex_pair)`` where ``complex_pair`` is either
    ``None`` or ``(re, im)`` of the conjugate pair.
    """
    shift = a / 3.0
    p = b - a * a / 3.0
    q = 2.0 * a**3 / 27.0 - a * b / 3.0 + c
    delta = (q / 2.0) ** 2 + (p / 3.0) ** 3
    tau = 1e-12 * max(1.0, q * q, abs(p) ** 3)

    if delta > tau or p >= 0:
        # one real root (Cardano), in the cancellation-free arrangement
        sq = math.sqrt(max(delta, 0.0))
        big = -math.copysign(1.0, q) * np.cbrt(abs(q) / 2.0 + sq)
        small = -p / (3.0 * big) if big != 0 else 0.0
        root = big + small - shift
        re = -(big + small) / 2.0 - shift
        im = math.sqrt(3.0) / 2.0 * (big - small)
        return [root], (re, im)

    # three real roots (trigonometric); |delta| <= tau is the repeated-root limit
    m = 2.0 * math.sqrt(-p / 3.0)
    arg = 3.0 * q / (p * m)
    theta = math.acos(min(1.0, max(-1.0, arg))) / 3.0
    roots = [m * math.cos(theta - 2.0 * math.pi * k / 3.0) - shift for k in range(3)]
    return roots, None


def _quadratic_root(k1, r_d):
    """Root of ``k1 r^2 + r - r_d = 0`` continuous with ``r = r_d`` at ``k1 = 0``."""
    if k1 == 0.0:
        return r_d
    # range already checked against the full model; clamp rounding at the fold
    disc = max(1.0 + 4.0 * k1 * r_d, 0.0)
    return 2.0 * r_d / (1.0 + math.sqrt(disc))


def _finite_roots(a, b, c):
    try:
        real, _ = _cubic_roots(a, b, c)
    except (OverflowError, ZeroDivisionError, ValueError):
        return []
    return [r for r in real if math.isfinite(r)]


def _quadcubic_residual(k1, k2, r_d, r):
    return ((k2 * r + k1) * r + 1.0) * r - r_d


def _solve_quadcubic(m: QuadCubic, r_d: float, rng: ValidRadiusRange) -> float:
    k1, k2 = m.k1, m.k2
    if r_d == 0.0:
        return 0.0
    if k2 == 0.0:
        return _quadratic_root(k1, r_d)

    # The same equation in w = r_d / r, w^3 - w^2 - k1 r_d w - k2 r_d^2 = 0, keeps
    # its digits when |k1/k2| is huge and the shift a/3 swamps the wanted root;
    # its coefficients stay O(1) for small r_d and the wanted root is near w = 1.
    recip = _finite_roots(-1.0, -k1 * r_d, -k2 * r_d * r_d)
    roots = [r_d / w for w in recip if w > 0]
    if abs(k2) >= K2_DEGENERATE:
        roots = _finite_roots(k1 / k2, 1.0 / k2, -r_d / k2) + roots
    if not roots:
        # only reachable when both scalings overflow
        return _quadratic_root(k1, r_d)

    upper = rng.r_max * (1.0 + 1e-9) if math.isfinite(rng.r_max) else math.inf
    slack = 1e-12 * max(1.0, r_d)
    in_range = [r for r in roots if -slack <= r <= upper]
    if not in_range:
        in_range = [min(roots, key=lambda r: abs(r - r_d))]
    # exactly one root lies on the monotone branch; among numerically
    # equivalent copies keep the one that best satisfies the equation
    best = min(in_range, key=lambda r: (abs(_quadcubic_residual(k1, k2, r_d, r)), abs(r - r_d)))
    return max(best, 0.0)


def undistort_radius_analytic(m: QuadCubic, r_d):
    """Exact undistorted radius for the quadratic-term model.

    Solves ``k2 r^3 + k1 r^2 + r - r_d = 0`` in closed form and returns the
    root on the monotone branch ``[0, r_max)``. Scalars return floats, arrays
    return arrays of the same shape.
    """
    if not isinstance(m, QuadCubic):
        raise TypeError("analytic undistortion is defined for QuadCubic models only")
    rng = valid_radius_range(m)
    rd_arr = np.asarray(r_d, dtype=float)
    out = []
    for x in rd_arr.ravel():
        x = float(x)
        _check_in_range(rng, x)
        out.append(_solve_quadcubic(m, x, rng))
    return _scalar_or_array(out, r_d)


# ---------------------------------------------------------------------------
# Iterative inverse (independent oracle for the closed form)
# ---------------------------------------------------------------------------


def _newton_scalar(m: DistortionModel, r_d: float, rng: ValidRadiusRange) -> float:
    if r_d == 0.0:
        return 0.0

    def g(r):
        return float(r * m.factor(r)) - r_d

    tol = NEWTON_TOL * max(1.0, r_d)
    lo = 0.0
    if math.isfinite(rng.r_max):
        hi = rng.r_max
    else:
        hi = max(2.0 * r_d, 1.0)
        while g(hi) < 0:
            hi *= 2.0
            if hi > 1e300:
                raise NoConvergence(f"cannot bracket distorted radius {r_d}")

    r = min(r_d, hi)
    for _ in range(NEWTON_MAX_ITERS):
        gr = g(r)
        if abs(gr) < tol:
            return r
        if gr < 0:
            lo = r
        else:
            hi = r
        d = float(m.slope(r))
        step_ok = d > 0
        if step_ok:
            nxt = r - gr / d
            step_ok = lo < nxt < hi
        r_new = nxt if step_ok else 0.5 * (lo + hi)
        if r_new == r or hi - lo <= 4.0 * np.finfo(float).eps * max(hi, 1.0):
            return r_new
        r = r_new
    raise NoConvergence(
        f"Newton iteration did not reach |g| < {tol:.1e} for r_d={r_d} "
        f"within {NEWTON_MAX_ITERS} iterations"
    )


def undistort_radius_numeric(m: DistortionModel, r_d):
    """Undistorted radius by Newton iteration safeguarded with bisection."""
    rd_arr = np.asarray(r_d, dtype=float)
    if isinstance(m, DistortedToUndistorted):
        if np.any(rd_arr < 0):
            raise NegativeRadius("distorted radius must be non-negative")
        return du_undistort_radius(m, r_d)
    rng = valid_radius_range(m)
    out = []
    for x in rd_arr.ravel():
        x = float(x)
        _check_in_range(rng, x)
        out.append(_newton_scalar(m, x, rng))
    return _scalar_or_array(out, r_d)


def approx_inverse_evenpoly2(m: EvenPoly2, r_d):
    """Non-iterative approximate inverse ``r_d (1 - k1 r_d^2 - k2 r_d^4)``.

    Only first-order accurate in the coefficients; kept for comparison with
    the exact inverses.
    """
    r_d = np.asarray(r_d, dtype=float) if np.ndim(r_d) else float(r_d)
    rd2 = r_d * r_d
    return r_d * (1.0 - m.k1 * rd2 - m.k2 * rd2 * rd2)


def du_undistort_radius(m: DistortedToUndistorted, r_d):
    r_d = np.asarray(r_d, dtype=float) if np.ndim(r_d) else float(r_d)
    return r_d * (1.0 + m.k1 * r_d + m.k2 * r_d * r_d)


def undistort_radius(m: DistortionModel, r_d):
    """Dispatch to the appropriate inverse for ``m``."""
    if isinstance(m, QuadCubic):
        return undistort_radius_analytic(m, r_d)
    return undistort_radius_numeric(m, r_d)


def undistort_point(m: DistortionModel, p) -> np.ndarray:
    xy = np.asarray(p, dtype=float)
    single = xy.ndim == 1
    xy = np.atleast_2d(xy)
    rd = np.hypot(xy[:, 0], xy[:, 1])
    r = np.atleast_1d(undistort_radius(m, rd))
    scale = np.ones_like(rd)
    nz = rd > 0
    scale[nz] = r[nz] / rd[nz]
    out = xy * scale[:, None]
    return out[0] if single else out


def undistort_pixel(m: DistortionModel, intr: CameraIntrinsics, p_d) -> np.ndarray:
    """Map observed (distorted) pixel(s) to their distortion-free location."""
    return normalized_to_pixel(intr, undistort_point(m, pixel_to_normalized(intr, p_d)))
