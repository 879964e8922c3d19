"""Camera models, projections and the map back-projection."""

from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from marsloc.constants import QUERY_FOCAL_MM, QUERY_HEIGHT_PX, QUERY_SENSOR_WIDTH_MM, QUERY_WIDTH_PX
from marsloc.errors import BehindCameraError, InvalidDepthError, InvalidParameterError, InvalidPoseError, OutOfBoundsError
from marsloc.geometry import (
    backproject_ortho,
    ground_sample_distance,
    intrinsics_matrix,
    nadir_pose,
    project_ortho,
    project_perspective,
    rotation_angle,
    unproject_perspective,
)
from marsloc.models.camera import OrthoIntrinsics, PerspectiveIntrinsics, Pose

QUERY_CAMERA = PerspectiveIntrinsics(QUERY_FOCAL_MM, QUERY_SENSOR_WIDTH_MM, QUERY_WIDTH_PX, QUERY_HEIGHT_PX)


class TestIntrinsics:
    def test_matrix_from_optics(self):
        K = intrinsics_matrix(QUERY_CAMERA)
        np.testing.assert_allclose(K, [[256.0, 0.0, 320.0], [0.0, 256.0, 240.0], [0.0, 0.0, 1.0]])

    @pytest.mark.parametrize(("altitude", "expected"), [(64.0, 0.25), (200.0, 0.78125)])
    def test_ground_sample_distance_over_altitude_range(self, altitude, expected):
        assert ground_sample_distance(altitude, QUERY_CAMERA) == pytest.approx(expected)

    @pytest.mark.parametrize("bad", [(0.0, 80.0, 640, 480), (32.0, -1.0, 640, 480), (32.0, 80.0, 0, 480)])
    def test_rejects_non_positive_optics(self, bad):
        with pytest.raises(InvalidParameterError):
            PerspectiveIntrinsics(*bad)

    def test_ortho_pixel_size(self):
        oi = OrthoIntrinsics.from_pixel_size(0.25, 400, 300)
        assert oi.pixel_size == pytest.approx(0.25)
        assert (oi.cx, oi.cy) == (200.0, 150.0)


class TestPose:
    def test_nadir_pose(self):
        pose = nadir_pose(1.0, 2.0, 3.0)
        assert pose.is_nadir
        np.testing.assert_array_equal(pose.translation, [1.0, 2.0, 3.0])

    def test_rejects_non_orthonormal_rotation(self):
        with pytest.raises(InvalidPoseError):
            Pose(np.diag([1.0, 1.0, 2.0]), np.zeros(3))

    def test_rejects_reflection(self):
        with pytest.raises(InvalidPoseError):
            Pose(np.diag([1.0, 1.0, -1.0]), np.zeros(3))

    def test_payload_round_trip(self):
        pose = Pose(Rotation.from_euler("xyz", [0.1, -0.2, 0.3]).as_matrix(), (4.0, 5.0, 6.0))
        assert Pose.from_payload(pose.to_payload()) == pose

    def test_rotation_angle(self):
        rot = Rotation.from_rotvec([0.0, 0.0, 0.3]).as_matrix()
        assert rotation_angle(np.eye(3), rot) == pytest.approx(0.3)


class TestPerspective:
    def test_nadir_projection(self):
        K = intrinsics_matrix(QUERY_CAMERA)
        pose = nadir_pose(0.0, 0.0, 100.0)
        assert project_perspective(K, pose, (0.0, 0.0, 0.0)) == pytest.approx((320.0, 240.0, 100.0))
        # East is +u, North is -v
        assert project_perspective(K, pose, (1.0, 0.0, 0.0)) == pytest.approx((322.56, 240.0, 100.0))
        assert project_perspective(K, pose, (0.0, 1.0, 0.0)) == pytest.approx((320.0, 237.44, 100.0))

    def test_behind_camera(self):
        K = intrinsics_matrix(QUERY_CAMERA)
        with pytest.raises(BehindCameraError):
            project_perspective(K, nadir_pose(0.0, 0.0, 100.0), (0.0, 0.0, 200.0))

    def test_unproject_inverts_projection(self):
        K = intrinsics_matrix(QUERY_CAMERA)
        rng = np.random.default_rng(3)
        pose = Pose(Rotation.random(1, 5)[0].as_matrix(), rng.uniform(-10, 10, 3))
        for _ in range(50):
            u, v, z = rng.uniform(0, 640), rng.uniform(0, 480), rng.uniform(1, 300)
            point = unproject_perspective(K, pose, u, v, z)
            assert project_perspective(K, pose, point) == pytest.approx((u, v, z), abs=1e-9)

    def test_unproject_rejects_non_positive_depth(self):
        with pytest.raises(InvalidDepthError):
            unproject_perspective(intrinsics_matrix(QUERY_CAMERA), nadir_pose(0, 0, 10), 1.0, 1.0, 0.0)


class TestOrthographic:
    def test_nadir_backprojection(self):
        oi = OrthoIntrinsics.from_pixel_size(0.25, 400, 300)
        pose = nadir_pose(10.0, 20.0, 4000.0)
        point = backproject_ortho(oi, pose, 200.0, 150.0, 4000.0)
        np.testing.assert_allclose(point, [10.0, 20.0, 0.0], atol=1e-9)
        # one pixel right is 0.25 m East, one pixel down 0.25 m South
        np.testing.assert_allclose(backproject_ortho(oi, pose, 201.0, 151.0, 3990.0), [10.25, 19.75, 10.0], atol=1e-9)

    def test_round_trip_over_random_poses(self):
        oi = OrthoIntrinsics.from_pixel_size(0.5, 320, 240)
        rng = np.random.default_rng(11)
        rotations = Rotation.random(100, 12).as_matrix()
        for rotation in rotations:
            pose = Pose(rotation, rng.uniform(-100, 100, 3))
            u = rng.uniform(-0.5, oi.width - 0.5, 1000)
            v = rng.uniform(-0.5, oi.height - 0.5, 1000)
            z = rng.uniform(0.1, 5000.0, 1000)
            pu, pv, pz = project_ortho(oi, pose, backproject_ortho(oi, pose, u, v, z))
            np.testing.assert_allclose(pu, u, atol=1e-9)
            np.testing.assert_allclose(pv, v, atol=1e-9)
            np.testing.assert_allclose(pz, z, rtol=1e-12, atol=1e-9)

    @pytest.mark.parametrize("depth", [0.0, -1.0, math.nan, math.inf])
    def test_invalid_depth(self, depth):
        oi = OrthoIntrinsics.from_pixel_size(0.25, 400, 300)
        with pytest.raises(InvalidDepthError):
            backproject_ortho(oi, nadir_pose(0, 0, 100), 10.0, 10.0, depth)

    @pytest.mark.parametrize(("u", "v"), [(-0.6, 10.0), (399.6, 10.0), (10.0, -0.6), (10.0, 299.6)])
    def test_pixel_outside_map(self, u, v):
        oi = OrthoIntrinsics.from_pixel_size(0.25, 400, 300)
        with pytest.raises(OutOfBoundsError):
            backproject_ortho(oi, nadir_pose(0, 0, 100), u, v, 10.0)

    def test_pixel_edges_are_inside(self):
        oi = OrthoIntrinsics.from_pixel_size(0.25, 400, 300)
        points = backproject_ortho(oi, nadir_pose(0, 0, 100), [-0.5, 399.5], [-0.5, 299.5], [10.0, 10.0])
        assert points.shape == (2, 3)
