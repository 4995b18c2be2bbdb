"""Dense Levenberg-Marquardt with finite-difference Jacobians."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import CalibrationError, JacobianNaN, SingularNormalEquations

logger = logging.getLogger(__name__)

LAMBDA_CEILING = 1e16


@dataclass(frozen=True)
class LmOptions:
    """Stopping and damping settings.

    The first four defaults reproduce the stopping settings the reference
    calibration runs were made with (TolX, TolFun, MaxIter, MaxFunEvals).
    """

    param_tol: float = 1e-5
    fn_tol: float = 1e-5
    max_iters: int = 120
    max_fn_evals: int = 8000
    initial_lambda: float = 1e-3
    lambda_up: float = 10.0
    lambda_down: float = 0.1
    fd_step: float = 1e-6

    def __post_init__(self):
        for name in ("param_tol", "fn_tol", "initial_lambda", "lambda_up", "lambda_down", "fd_step"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.max_iters < 1 or self.max_fn_evals < 1:
            raise ValueError("max_iters and max_fn_evals must be >= 1")
        if not self.lambda_up > 1 or not self.lambda_down < 1:
            raise ValueError("need lambda_up > 1 and lambda_down < 1")


@dataclass
class LmResult:
    x: np.ndarray
    cost: float
    iterations: int
    n_evals: int
    termination: str
    cost_history: list = field(default_factory=list)

    @property
    def initial_cost(self) -> float:
        return self.cost_history[0]


def numeric_jacobian(residual_fn, x, step=1e-6, f0=None) -> np.ndarray:
    """Forward-difference Jacobian, column ``i`` perturbed by ``step * max(1, |x_i|)``."""
    x = np.asarray(x, dtype=float)
    f0 = np.asarray(residual_fn(x) if f0 is None else f0, dtype=float)
    jac = np.empty((f0.size, x.size))
    for i in range(x.size):
        h = step * max(1.0, abs(x[i]))
        xp = x.copy()
        xp[i] += h
        try:
            fp = np.asarray(residual_fn(xp), dtype=float)
        except CalibrationError as exc:
            raise JacobianNaN(f"residual undefined when perturbing parameter {i}: {exc}") from exc
        # use the realized step to cancel representation error in x + h
        jac[:, i] = (fp - f0) / (xp[i] - x[i])
    if not np.isfinite(jac).all():
        bad = np.argwhere(~np.isfinite(jac))[0]
        raise JacobianNaN(f"non-finite Jacobian entry at residual {bad[0]}, parameter {bad[1]}")
    return jac


def central_jacobian(residual_fn, x, step=1e-6) -> np.ndarray:
    """Central-difference Jacobian; used to sanity-check the forward version."""
    x = np.asarray(x, dtype=float)
    cols = []
    for i in range(x.size):
        h = step * max(1.0, abs(x[i]))
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        fp = np.asarray(residual_fn(xp), dtype=float)
        fm = np.asarray(residual_fn(xm), dtype=float)
        cols.append((fp - fm) / (xp[i] - xm[i]))
    return np.column_stack(cols)


def _cost(r):
    return float(np.dot(r, r))


def minimize(residual_fn, x0, opts: LmOptions | None = None) -> LmResult:
    """Minimize ``sum(residual_fn(x)**2)`` starting from ``x0``.

    A trial step is accepted only if it lowers the cost, so the accepted costs
    in ``cost_history`` are strictly decreasing. Trial points where the
    residual is undefined (a :class:`CalibrationError` or non-finite values)
    are rejected like any other uphill step.
    """
    opts = opts or LmOptions()
    x = np.array(x0, dtype=float)
    r = np.asarray(residual_fn(x), dtype=float)
    if not np.isfinite(r).all():
        raise ValueError("residuals are not finite at the starting point")
    if r.size < x.size:
        raise ValueError(f"need at least as many residuals ({r.size}) as parameters ({x.size})")
    n_evals = 1
    cost = _cost(r)
    history = [cost]
    lam = opts.initial_lambda
    iterations = 0
    reason = None

    while reason is None:
        if iterations >= opts.max_iters:
            reason = "max_iters"
            break
        if n_evals + x.size >= opts.max_fn_evals:
            reason = "max_fn_evals"
            break
        if cost == 0.0:
            reason = "zero_cost"
            break

        jac = numeric_jacobian(residual_fn, x, opts.fd_step, f0=r)
        n_evals += x.size
        grad = jac.T @ r
        hess = jac.T @ jac
        diag = np.diag(hess).copy()
        if np.any(diag <= 0):
            raise SingularNormalEquations(
                f"parameter(s) {np.flatnonzero(diag <= 0).tolist()} do not affect the residuals",
                iteration=iterations,
            )
        if not np.any(grad):
            reason = "zero_gradient"
            break

        while True:
            try:
                chol = np.linalg.cholesky(hess + lam * np.diag(diag))
                delta = -np.linalg.solve(chol.T, np.linalg.solve(chol, grad))
            except np.linalg.LinAlgError:
                delta = None
            if delta is not None:
                x_new = x + delta
                try:
                    r_new = np.asarray(residual_fn(x_new), dtype=float)
                    cost_new = _cost(r_new) if np.isfinite(r_new).all() else np.inf
                except CalibrationError:
                    cost_new = np.inf
                n_evals += 1
                if cost_new < cost:
                    break
            lam *= opts.lambda_up
            if lam > LAMBDA_CEILING:
                if delta is None:
                    raise SingularNormalEquations(
                        "damped normal equations stayed singular", iteration=iterations
                    )
                reason = "no_progress"
                break
            if n_evals >= opts.max_fn_evals:
                reason = "max_fn_evals"
                break
        if reason is not None:
            break

        iterations += 1
        scaled_step = np.max(np.abs(delta) / (1.0 + np.abs(x)))
        rel_drop = (cost - cost_new) / cost
        x, r, cost = x_new, r_new, cost_new
        history.append(cost)
        lam = max(lam * opts.lambda_down, 1e-15)
        logger.debug("iter %d cost %.10g lambda %.3g step %.3g", iterations, cost, lam, scaled_step)
        if scaled_step < opts.param_tol:
            reason = "param_tol"
        elif rel_drop < opts.fn_tol:
            reason = "fn_tol"

    return LmResult(
        x=x,
        cost=cost,
        iterations=iterations,
        n_evals=n_evals,
        termination=reason,
        cost_history=history,
    )
