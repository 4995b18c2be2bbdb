import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from radialcal.errors import NonPositiveDepth
from radialcal.geometry import (
    CameraIntrinsics,
    PoseRT,
    axis_angle_to_matrix,
    matrix_to_axis_angle,
    normalized_to_pixel,
    pixel_to_normalized,
    project,
)

UNIT = CameraIntrinsics(alpha=1.0, beta=1.0, gamma=0.0, u0=0.0, v0=0.0)


def random_intrinsics(rng):
    return CameraIntrinsics(
        alpha=rng.uniform(200, 1500),
        beta=rng.uniform(200, 1500),
        gamma=rng.uniform(-2, 2),
        u0=rng.uniform(100, 700),
        v0=rng.uniform(100, 500),
    )


def random_pose(rng):
    w = rng.normal(size=3)
    w *= rng.uniform(0, 1.0) / np.linalg.norm(w)
    return PoseRT.from_axis_angle(w, [rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(300, 800)])


class TestIntrinsics:
    def test_matrix_layout(self):
        A = CameraIntrinsics(alpha=2, beta=4, gamma=1, u0=5, v0=6).matrix
        np.testing.assert_array_equal(A, [[2, 1, 5], [0, 4, 6], [0, 0, 1]])

    def test_inverse_matrix(self, rng):
        intr = random_intrinsics(rng)
        np.testing.assert_allclose(intr.inverse_matrix @ intr.matrix, np.eye(3), atol=1e-12)

    @pytest.mark.parametrize("alpha,beta", [(0, 1), (1, -1), (-3, 2)])
    def test_rejects_nonpositive_scale(self, alpha, beta):
        with pytest.raises(ValueError):
            CameraIntrinsics(alpha=alpha, beta=beta, gamma=0, u0=0, v0=0)

    def test_rejects_nan(self):
        with pytest.raises(ValueError):
            CameraIntrinsics(alpha=1, beta=1, gamma=float("nan"), u0=0, v0=0)

    def test_vector_round_trip(self, rng):
        intr = random_intrinsics(rng)
        assert CameraIntrinsics.from_vector(intr.to_vector()) == intr


class TestProject:
    def test_optical_axis_hits_principal_point(self):
        np.testing.assert_array_equal(project(UNIT, PoseRT.identity(), [0, 0, 1]), [0, 0])

    def test_perspective_division(self):
        np.testing.assert_allclose(project(UNIT, PoseRT.identity(), [0.5, -0.5, 2]), [0.25, -0.25])

    def test_public_table_principal_point(self):
        intr = CameraIntrinsics(alpha=832.486, beta=832.5157, gamma=0.2042, u0=303.9605, v0=206.5811)
        np.testing.assert_allclose(project(intr, PoseRT.identity(), [0, 0, 1]), [303.9605, 206.5811])

    @pytest.mark.parametrize("z", [0.0, -1.0, 1e-13])
    def test_nonpositive_depth(self, z):
        with pytest.raises(NonPositiveDepth):
            project(UNIT, PoseRT.identity(), [0.1, 0.2, z])

    def test_matches_projection_matrix(self, rng):
        # lambda [u, v, 1]^T = A [R | t] [X, Y, Z, 1]^T with lambda the camera depth
        for _ in range(50):
            intr, pose = random_intrinsics(rng), random_pose(rng)
            pw = np.column_stack([rng.uniform(-100, 100, (20, 2)), rng.uniform(-20, 20, 20)])
            P = intr.matrix @ np.column_stack([pose.rotation, pose.translation])
            h = np.column_stack([pw, np.ones(len(pw))]) @ P.T
            uv = project(intr, pose, pw)
            lam = (pw @ pose.rotation.T + pose.translation)[:, 2]
            np.testing.assert_allclose(lam[:, None] * np.column_stack([uv, np.ones(len(uv))]), h, rtol=1e-10)

    def test_array_shape(self, rng):
        pw = np.column_stack([rng.uniform(-1, 1, (7, 2)), np.zeros(7)])
        pose = PoseRT(np.eye(3), [0, 0, 10])
        assert project(UNIT, pose, pw).shape == (7, 2)


class TestNormalization:
    def test_principal_point_to_origin(self, rng):
        intr = random_intrinsics(rng)
        np.testing.assert_allclose(pixel_to_normalized(intr, [intr.u0, intr.v0]), [0, 0], atol=1e-15)

    def test_direct_inversion(self):
        intr = CameraIntrinsics(alpha=2, beta=4, gamma=0, u0=10, v0=20)
        np.testing.assert_allclose(pixel_to_normalized(intr, [12, 24]), [1, 1])

    def test_origin_to_principal_point(self, rng):
        intr = random_intrinsics(rng)
        np.testing.assert_allclose(normalized_to_pixel(intr, [0, 0]), [intr.u0, intr.v0])

    def test_row_evaluation(self):
        intr = CameraIntrinsics(alpha=2, beta=4, gamma=1, u0=0, v0=0)
        np.testing.assert_allclose(normalized_to_pixel(intr, [1, 1]), [3, 4])

    def test_round_trip_pixels(self, rng):
        intr = random_intrinsics(rng)
        p = rng.uniform(-200, 1000, (100, 2))
        np.testing.assert_allclose(normalized_to_pixel(intr, pixel_to_normalized(intr, p)), p, rtol=0, atol=1e-10)

    def test_round_trip_normalized_1000(self, rng):
        intr = random_intrinsics(rng)
        x = rng.uniform(-1.5, 1.5, (1000, 2))
        np.testing.assert_allclose(pixel_to_normalized(intr, normalized_to_pixel(intr, x)), x, rtol=0, atol=1e-10)

    def test_matches_inverse_matrix(self, rng):
        intr = random_intrinsics(rng)
        p = rng.uniform(0, 640, (10, 2))
        h = np.column_stack([p, np.ones(10)]) @ intr.inverse_matrix.T
        np.testing.assert_allclose(pixel_to_normalized(intr, p), h[:, :2], atol=1e-14)


class TestRotation:
    def test_zero_is_identity(self):
        np.testing.assert_array_equal(axis_angle_to_matrix([0, 0, 0]), np.eye(3))

    def test_half_turn_about_x(self):
        np.testing.assert_allclose(axis_angle_to_matrix([np.pi, 0, 0]), np.diag([1, -1, -1]), atol=1e-15)

    @settings(max_examples=200, deadline=None)
    @given(st.tuples(*[st.floats(-1, 1)] * 3), st.floats(0, np.pi * 0.999))
    def test_round_trip(self, axis, angle):
        axis = np.asarray(axis)
        n = np.linalg.norm(axis)
        w = np.zeros(3) if n < 1e-6 else axis / n * angle
        np.testing.assert_allclose(matrix_to_axis_angle(axis_angle_to_matrix(w)), w, atol=1e-10)

    def test_orthonormal(self, rng):
        for _ in range(100):
            R = axis_angle_to_matrix(rng.normal(size=3))
            np.testing.assert_allclose(R.T @ R, np.eye(3), atol=1e-10)
            assert abs(np.linalg.det(R) - 1) < 1e-10
            np.testing.assert_allclose(axis_angle_to_matrix(matrix_to_axis_angle(R)), R, atol=1e-10)

    def test_pose_from_vector(self, rng):
        pose = random_pose(rng)
        back = PoseRT.from_vector(pose.to_vector())
        np.testing.assert_allclose(back.rotation, pose.rotation, atol=1e-12)
        np.testing.assert_array_equal(back.translation, pose.translation)

    def test_pose_is_read_only(self):
        pose = PoseRT.identity()
        with pytest.raises(ValueError):
            pose.rotation[0, 0] = 2.0
