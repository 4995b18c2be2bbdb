import numpy as np
import pytest

from radialcal.calibration import _make_residual_fn, pack_parameters
from radialcal.distortion import QuadCubic, distort_radius
from radialcal.errors import JacobianNaN, SingularNormalEquations
from radialcal.optimizer import LmOptions, central_jacobian, minimize, numeric_jacobian


def rosenbrock(x):
    return np.array([1.0 - x[0], 10.0 * (x[1] - x[0] ** 2)])


class TestOptions:
    def test_defaults(self):
        o = LmOptions()
        assert (o.param_tol, o.fn_tol, o.max_iters, o.max_fn_evals) == (1e-5, 1e-5, 120, 8000)
        assert (o.initial_lambda, o.lambda_up, o.lambda_down, o.fd_step) == (1e-3, 10.0, 0.1, 1e-6)

    @pytest.mark.parametrize(
        "kw", [dict(param_tol=0), dict(fn_tol=-1), dict(max_iters=0), dict(max_fn_evals=0),
               dict(lambda_up=1.0), dict(lambda_down=1.0), dict(fd_step=0)]
    )
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            LmOptions(**kw)


class TestMinimize:
    def test_scalar_linear(self):
        res = minimize(lambda x: x - 3.0, np.array([0.0]))
        assert res.x[0] == pytest.approx(3.0, abs=1e-8)

    def test_rosenbrock(self):
        opts = LmOptions(param_tol=1e-12, fn_tol=1e-15)
        res = minimize(rosenbrock, np.array([-1.2, 1.0]), opts)
        np.testing.assert_allclose(res.x, [1.0, 1.0], atol=1e-6)

    def test_rosenbrock_default_tolerances(self):
        res = minimize(rosenbrock, np.array([-1.2, 1.0]))
        np.testing.assert_allclose(res.x, [1.0, 1.0], atol=1e-4)

    def test_quadratic_bowl_single_gauss_newton_step(self):
        # r = A x - b: the undamped step lands on the normal-equation solution
        A = np.array([[2.0, 1.0], [0.5, 3.0], [1.0, -1.0]])
        b = np.array([1.0, 2.0, 0.5])
        x_star = np.linalg.solve(A.T @ A, A.T @ b)
        res = minimize(lambda x: A @ x - b, np.zeros(2), LmOptions(initial_lambda=1e-14))
        assert res.iterations <= 2
        np.testing.assert_allclose(res.cost_history[1], np.sum((A @ x_star - b) ** 2), rtol=1e-9)
        np.testing.assert_allclose(res.x, x_star, rtol=1e-7)

    def test_history_strictly_decreasing(self):
        res = minimize(rosenbrock, np.array([-1.2, 1.0]), LmOptions(param_tol=1e-12, fn_tol=1e-15))
        h = np.array(res.cost_history)
        assert np.all(np.diff(h) < 0)
        assert res.initial_cost == h[0]
        assert len(h) == res.iterations + 1

    def test_deterministic(self):
        a = minimize(rosenbrock, np.array([-1.2, 1.0]))
        b = minimize(rosenbrock, np.array([-1.2, 1.0]))
        assert a.cost_history == b.cost_history
        assert np.array_equal(a.x, b.x)

    def test_zero_cost_start(self):
        res = minimize(lambda x: x - 3.0, np.array([3.0]))
        assert res.termination == "zero_cost"
        assert res.iterations == 0

    def test_iteration_cap(self):
        res = minimize(rosenbrock, np.array([-1.2, 1.0]), LmOptions(max_iters=2))
        assert res.iterations == 2
        assert res.termination == "max_iters"

    def test_evaluation_cap(self):
        res = minimize(rosenbrock, np.array([-1.2, 1.0]), LmOptions(max_fn_evals=10))
        assert res.termination == "max_fn_evals"
        assert res.n_evals <= 10

    def test_too_few_residuals(self):
        with pytest.raises(ValueError):
            minimize(lambda x: np.array([x.sum()]), np.zeros(2))

    def test_non_finite_start(self):
        with pytest.raises(ValueError):
            minimize(lambda x: np.array([np.nan]), np.zeros(1))

    def test_unused_parameter_is_singular(self):
        with pytest.raises(SingularNormalEquations) as ei:
            minimize(lambda x: np.array([x[0] - 1.0, x[0] + 1.0]), np.zeros(2))
        assert ei.value.iteration == 0

    def test_undefined_trial_points_are_rejected(self):
        # residual undefined for x < 0.5: overshooting steps must be refused, not crash
        def fn(x):
            if x[0] < 0.5:
                return np.array([np.nan])
            return np.array([np.log(x[0]) - 0.1])

        res = minimize(fn, np.array([3.0]), LmOptions(param_tol=1e-12, fn_tol=1e-15))
        assert res.x[0] == pytest.approx(np.exp(0.1), rel=1e-8)


class TestJacobian:
    def test_linear(self, rng):
        A = rng.normal(size=(6, 4))
        b = rng.normal(size=6)
        x = rng.normal(size=4)
        J = numeric_jacobian(lambda z: A @ z - b, x)
        assert np.max(np.abs(J - A)) <= 1e-9 * np.linalg.norm(A)

    def test_zero_function(self):
        J = numeric_jacobian(lambda z: np.zeros(3), np.ones(2))
        assert np.array_equal(J, np.zeros((3, 2)))

    @pytest.mark.parametrize("r", [0.1, 0.4, 0.7])
    def test_distortion_k1_derivative(self, r):
        # quad-cubic map r(1 + k1 r + k2 r^2) has d/dk1 = r^2
        fn = lambda k: np.array([distort_radius(QuadCubic(k[0], -0.14), r)])
        J = numeric_jacobian(fn, np.array([-0.12]))
        assert J[0, 0] == pytest.approx(r * r, abs=1e-7)

    def test_step_scales_with_magnitude(self):
        # d/dx of x^2 at 1e4 with step 1e-6*|x|: forward error is exactly the step
        J = numeric_jacobian(lambda z: z**2, np.array([1e4]))
        assert J[0, 0] == pytest.approx(2e4 + 1e-2, rel=1e-9)

    def test_nan_raises(self):
        with pytest.raises(JacobianNaN):
            numeric_jacobian(lambda z: np.array([np.nan if z[0] > 0 else 0.0]), np.zeros(1))

    def test_central_is_second_order(self):
        fn = lambda z: np.array([np.sin(z[0]) * z[1], np.exp(z[1])])
        x = np.array([0.3, 0.7])
        exact = np.array([[np.cos(0.3) * 0.7, np.sin(0.3)], [0.0, np.exp(0.7)]])
        fwd = numeric_jacobian(fn, x, step=1e-4)
        ctr = central_jacobian(fn, x, step=1e-4)
        assert np.max(np.abs(ctr - exact)) < 0.01 * np.max(np.abs(fwd - exact))

    def test_full_objective_forward_vs_central(self, noiseless_quadcubic):
        # gradient sanity harness on the complete reprojection residual
        dataset, truth = noiseless_quadcubic
        fn = _make_residual_fn(truth.distortion, dataset)
        x = pack_parameters(truth.intrinsics, truth.distortion, truth.poses)
        step = 1e-6
        fwd = numeric_jacobian(fn, x, step)
        ctr = central_jacobian(fn, x, step / 2)
        scale = np.maximum(1.0, np.abs(x))
        # forward truncation error is O(step), relative to each column
        col_err = np.max(np.abs(fwd - ctr), axis=0)
        col_mag = np.max(np.abs(ctr), axis=0)
        assert np.all(col_err <= 1e-3 * col_mag + 1e-6 * scale * col_mag)
