"""Small input-validation helpers in the spirit of ``sklearn.utils.check_array``."""

import numbers

import numpy as np


def as_points(arr, dim, *, name="points", allow_nan=False, allow_single=True):
    """Coerce ``arr`` to a float array of shape ``(n, dim)``.

    A single point of shape ``(dim,)`` is accepted when ``allow_single`` and
    returned as ``(1, dim)``; callers decide whether to squeeze the result.
    """
    out = np.asarray(arr, dtype=float)
    if out.ndim == 1 and allow_single:
        out = out.reshape(1, -1)
    if out.ndim != 2 or out.shape[1] != dim:
        raise ValueError(f"{name} must have shape (n, {dim}), got {np.shape(arr)}")
    if allow_nan:
        bad = np.isinf(out).any()
    else:
        bad = not np.isfinite(out).all()
    if bad:
        raise ValueError(f"{name} contains non-finite values")
    return out


def check_finite_scalar(value, name):
    if not isinstance(value, numbers.Real) and np.ndim(value) != 0:
        raise TypeError(f"{name} must be a real scalar")
    value = float(value)
    if not np.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value}")
    return value


def check_positive_int(value, name, minimum=1):
    if not isinstance(value, numbers.Integral) or value < minimum:
        raise ValueError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)
